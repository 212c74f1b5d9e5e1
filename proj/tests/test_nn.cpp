#include <doctest.h>

#include <cmath>
#include <numeric>

#include "hierfed/errors.hpp"
#include "hierfed/nn/grad_check.hpp"
#include "hierfed/nn/layers.hpp"
#include "test_util.hpp"

using namespace hierfed;
using namespace hierfed::nn;
using testutil::fill_uniform;
using testutil::random_vec;

namespace {

ParamSet lstm_params(Eigen::Index in, Eigen::Index k) {
    ParamSet p;
    p.add("lstm.W", Tensor::Zero(4 * k, in));
    p.add("lstm.U", Tensor::Zero(4 * k, k));
    p.add("lstm.b", Tensor::Zero(4 * k, 1));
    return p;
}

ParamSet gru_params(Eigen::Index in, Eigen::Index k) {
    ParamSet p;
    p.add("gru.W", Tensor::Zero(3 * k, in));
    p.add("gru.U", Tensor::Zero(3 * k, k));
    p.add("gru.b", Tensor::Zero(3 * k, 1));
    return p;
}

ParamSet attn_params(Eigen::Index k) {
    ParamSet p;
    p.add("attn.W", Tensor::Zero(k, k));
    p.add("attn.p", Tensor::Zero(k, 1));
    return p;
}

constexpr double kFdStep = 1e-5;
constexpr double kRelTol = 1e-4;

// Runs an unrolled LSTM over `xs` and returns a random projection of every
// hidden and cell state; the gradient of that scalar exercises the whole
// backward chain including the carried cell gradient.
template <typename Input>
double lstm_probe(const ParamSet& p, const std::vector<Input>& xs, const Vec& h0,
                  const Vec& c0, const std::vector<Vec>& wh, const std::vector<Vec>& wc,
                  ParamSet* grad) {
    auto view = lstm_view(p, "lstm");
    std::vector<LstmCache<double, Input>> caches;
    Vec h = h0, c = c0;
    double out = 0.0;
    for (std::size_t t = 0; t < xs.size(); ++t) {
        caches.push_back(lstm_cell(xs[t], h, c, view));
        h = caches.back().h;
        c = caches.back().c;
        out += h.dot(wh[t]) + c.dot(wc[t]);
    }
    if (grad) {
        auto g = lstm_grads(*grad, "lstm");
        const Eigen::Index k = h0.size();
        Vec dh_next = Vec::Zero(k), dc_next = Vec::Zero(k), dh_prev(k), dc_prev(k);
        for (std::size_t t = xs.size(); t-- > 0;) {
            Vec dh = wh[t] + dh_next;
            Vec dc = wc[t] + dc_next;
            lstm_cell_backward(caches[t], dh, dc, view, g, dh_prev, dc_prev);
            dh_next = dh_prev;
            dc_next = dc_prev;
        }
    }
    return out;
}

template <typename Input>
double gru_probe(const ParamSet& p, const std::vector<Input>& xs, const Vec& h0,
                 const std::vector<Vec>& wh, ParamSet* grad) {
    auto view = gru_view(p, "gru");
    std::vector<GruCache<double, Input>> caches;
    Vec h = h0;
    double out = 0.0;
    for (std::size_t t = 0; t < xs.size(); ++t) {
        caches.push_back(gru_cell(xs[t], h, view));
        h = caches.back().h;
        out += h.dot(wh[t]);
    }
    if (grad) {
        auto g = gru_grads(*grad, "gru");
        Vec dh_next = Vec::Zero(h0.size()), dh_prev(h0.size());
        for (std::size_t t = xs.size(); t-- > 0;) {
            Vec dh = wh[t] + dh_next;
            gru_cell_backward(caches[t], dh, view, g, dh_prev);
            dh_next = dh_prev;
        }
    }
    return out;
}

}  // namespace

TEST_CASE("lstm zero parameters") {
    const Eigen::Index k = 4;
    auto p = lstm_params(3, k);
    auto w = lstm_view(p, "lstm");
    Vec x(3);
    x << 1.0, -2.0, 0.5;
    const Vec zero = Vec::Zero(k);
    auto c0 = lstm_cell(x, zero, zero, w);
    CHECK(c0.h.isZero(0.0));
    CHECK(c0.c.isZero(0.0));
    CHECK(c0.i.isApproxToConstant(0.5));

    Vec v(k);
    v << 1.0, -1.0, 2.0, 0.25;
    auto c1 = lstm_cell(Vec::Zero(3).eval(), zero, v, w);
    for (Eigen::Index i = 0; i < k; ++i) {
        CHECK(c1.c[i] == doctest::Approx(0.5 * v[i]).epsilon(1e-15));
        CHECK(c1.h[i] == doctest::Approx(0.5 * std::tanh(0.5 * v[i])).epsilon(1e-15));
    }
}

TEST_CASE("lstm shape errors name the layer") {
    auto p = lstm_params(3, 4);
    auto w = lstm_view(p, "lstm");
    const Vec x = Vec::Zero(5);
    const Vec zero = Vec::Zero(4);
    try {
        lstm_cell(x, zero, zero, w);
        FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
        CHECK(std::string(e.what()).find("lstm.W") != std::string::npos);
    }
    p.at("lstm.b") = Tensor::Zero(3, 1);
    CHECK_THROWS_AS(lstm_view(p, "lstm"), ShapeError);
}

TEST_CASE("gru zero parameters") {
    const Eigen::Index k = 5;
    auto p = gru_params(2, k);
    auto w = gru_view(p, "gru");
    std::mt19937_64 rng(3);
    Vec h = Vec::Zero(k);
    for (int t = 0; t < 3; ++t) h = gru_cell(random_vec(2, rng), h, w).h;
    CHECK(h.isZero(0.0));

    Vec v = random_vec(k, rng);
    auto c = gru_cell(Vec::Zero(2).eval(), v, w);
    CHECK((c.h - 0.5 * v).norm() < 1e-15);
    CHECK_THROWS_AS(gru_cell(Vec::Zero(3).eval(), v, w), ShapeError);
}

TEST_CASE("lstm backward matches finite differences") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        std::mt19937_64 rng(seed);
        const Eigen::Index in = 5, k = 6;
        const std::size_t T = 4;
        auto p = lstm_params(in, k);
        fill_uniform(p, rng);
        std::vector<Vec> xs, wh, wc;
        for (std::size_t t = 0; t < T; ++t) {
            xs.push_back(random_vec(in, rng));
            wh.push_back(random_vec(k, rng));
            wc.push_back(random_vec(k, rng));
        }
        const Vec h0 = random_vec(k, rng), c0 = random_vec(k, rng);
        auto g = zeros_like(p);
        lstm_probe(p, xs, h0, c0, wh, wc, &g);
        auto fd = finite_diff_grad(
            [&](const ParamSet& q) { return lstm_probe(q, xs, h0, c0, wh, wc, nullptr); }, p,
            kFdStep);
        CHECK(max_relative_error(g, fd) <= kRelTol);
    }
}

TEST_CASE("lstm backward with one-hot inputs matches dense inputs") {
    std::mt19937_64 rng(11);
    const Eigen::Index in = 7, k = 4;
    auto p = lstm_params(in, k);
    fill_uniform(p, rng);
    std::vector<OneHotInput> sparse = {{{0, 3}, 7}, {{1, 6}, 7}, {{2}, 7}};
    std::vector<Vec> dense, wh, wc;
    for (const auto& s : sparse) {
        dense.push_back(to_dense<double>(s));
        wh.push_back(random_vec(k, rng));
        wc.push_back(random_vec(k, rng));
    }
    const Vec h0 = Vec::Zero(k), c0 = Vec::Zero(k);
    auto gs = zeros_like(p), gd = zeros_like(p);
    const double ls = lstm_probe(p, sparse, h0, c0, wh, wc, &gs);
    const double ld = lstm_probe(p, dense, h0, c0, wh, wc, &gd);
    CHECK(ls == doctest::Approx(ld).epsilon(1e-14));
    CHECK(max_relative_error(gs, gd) < 1e-12);
}

TEST_CASE("gru backward matches finite differences") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        std::mt19937_64 rng(100 + seed);
        const Eigen::Index in = 4, k = 7;
        const std::size_t T = 5;
        auto p = gru_params(in, k);
        fill_uniform(p, rng);
        std::vector<Vec> xs, wh;
        for (std::size_t t = 0; t < T; ++t) {
            xs.push_back(random_vec(in, rng));
            wh.push_back(random_vec(k, rng));
        }
        const Vec h0 = random_vec(k, rng);
        auto g = zeros_like(p);
        gru_probe(p, xs, h0, wh, &g);
        auto fd = finite_diff_grad(
            [&](const ParamSet& q) { return gru_probe(q, xs, h0, wh, nullptr); }, p, kFdStep);
        CHECK(max_relative_error(g, fd) <= kRelTol);
    }
}

TEST_CASE("attention pooling degenerate cases") {
    std::mt19937_64 rng(5);
    const Eigen::Index k = 4;
    auto p = attn_params(k);
    fill_uniform(p, rng);
    auto view = attention_view(p, "attn");

    const Vec h = random_vec(k, rng);
    auto same = self_attention_pool(std::vector<Vec>(5, h), view);
    for (Eigen::Index t = 0; t < 5; ++t) CHECK(same.alpha[t] == doctest::Approx(0.2));
    CHECK((same.pooled - h).norm() < 1e-14);

    p.at("attn.W").setZero();
    view = attention_view(p, "attn");
    std::vector<Vec> hs = {random_vec(k, rng), random_vec(k, rng), random_vec(k, rng)};
    auto flat = self_attention_pool(hs, view);
    const Vec mean = (hs[0] + hs[1] + hs[2]) / 3.0;
    CHECK((flat.pooled - mean).norm() < 1e-14);
    CHECK(flat.alpha.sum() == doctest::Approx(1.0).epsilon(1e-15));

    CHECK_THROWS_AS(self_attention_pool(std::vector<Vec>{}, view), DomainError);
}

TEST_CASE("attention backward matches finite differences") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        std::mt19937_64 rng(200 + seed);
        const Eigen::Index k = 8;
        auto p = attn_params(k);
        fill_uniform(p, rng);
        std::vector<Vec> hs;
        for (int t = 0; t < 5; ++t) hs.push_back(random_vec(k, rng));
        const Vec w = random_vec(k, rng);
        auto loss = [&](const ParamSet& q) {
            return self_attention_pool(hs, attention_view(q, "attn")).pooled.dot(w);
        };
        auto cache = self_attention_pool(hs, attention_view(p, "attn"));
        auto g = zeros_like(p);
        auto ag = attention_grads(g, "attn");
        const Tensor dH = self_attention_backward(cache, w, attention_view(p, "attn"), ag);
        auto fd = finite_diff_grad(loss, p, kFdStep);
        CHECK(max_relative_error(g, fd) <= kRelTol);

        // Gradient with respect to the hidden states themselves.
        for (std::size_t t = 0; t < hs.size(); ++t) {
            for (Eigen::Index i = 0; i < k; ++i) {
                const double orig = hs[t][i];
                hs[t][i] = orig + kFdStep;
                const double up = loss(p);
                hs[t][i] = orig - kFdStep;
                const double down = loss(p);
                hs[t][i] = orig;
                const double num = (up - down) / (2 * kFdStep);
                const double an = dH(i, static_cast<Eigen::Index>(t));
                CHECK(std::abs(num - an) / std::max({std::abs(num), std::abs(an), 1e-6}) <=
                      kRelTol);
            }
        }
    }
}

TEST_CASE("linear softmax closed forms") {
    const Tensor W = Tensor::Zero(3, 2);
    Tensor b = Tensor::Zero(2, 1);
    const Vec h = Vec::Ones(3);
    Vec p = linear_softmax(h, W, b);
    CHECK(p[0] == 0.5);
    CHECK(p[1] == 0.5);

    b(0, 0) = std::log(3.0);
    p = linear_softmax(h, W, b);
    CHECK(p[0] == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(p[1] == doctest::Approx(0.25).epsilon(1e-15));

    CHECK_THROWS_AS(linear_softmax(h, Tensor::Zero(2, 2).eval(), b), ShapeError);
    CHECK_THROWS_AS(linear_softmax(h, W, Tensor::Zero(3, 1).eval()), ShapeError);
}

TEST_CASE("softmax sums to one and is permutation equivariant") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        Vec z = random_vec(6, rng, -20.0, 20.0);
        Vec s = softmax(z);
        CHECK(std::abs(s.sum() - 1.0) <= 1e-12);
        Eigen::Index am = 0, zm = 0;
        s.maxCoeff(&am);
        z.maxCoeff(&zm);
        CHECK(am == zm);
        Vec zr = z.reverse();
        CHECK((softmax(zr) - s.reverse()).norm() <= 1e-15);
    }
}

TEST_CASE("linear softmax backward matches finite differences") {
    std::mt19937_64 rng(21);
    ParamSet p;
    p.add("W", Tensor::Zero(5, 2));
    p.add("b", Tensor::Zero(2, 1));
    fill_uniform(p, rng);
    const Vec h = random_vec(5, rng);
    const Vec target = one_hot2<double>(1);
    auto loss = [&](const ParamSet& q) {
        return bce_loss(linear_softmax(h, q.at("W"), q.at("b")), target);
    };
    auto g = zeros_like(p);
    const Vec probs = linear_softmax(h, p.at("W"), p.at("b"));
    linear_softmax_backward(h, probs, bce_loss_grad(probs, target), p.at("W"), g.at("W"),
                            g.at("b"));
    CHECK(max_relative_error(g, finite_diff_grad(loss, p, kFdStep)) <= kRelTol);
}

TEST_CASE("bce loss values and gradient") {
    Vec p(2);
    p << 0.5, 0.5;
    CHECK(bce_loss(p, one_hot2<double>(0)) == doctest::Approx(std::log(2.0)).epsilon(1e-15));

    p << 1.0 - 1e-7, 1e-7;
    const double l = bce_loss(p, one_hot2<double>(0));
    CHECK(l > 0.0);
    CHECK(l == doctest::Approx(1e-7).epsilon(1e-6));

    // Clamped probabilities never produce infinities.
    p << 1.0, 0.0;
    CHECK(std::isfinite(bce_loss(p, one_hot2<double>(1))));
    CHECK(bce_loss(p, one_hot2<double>(1)) == doctest::Approx(-std::log(1e-7)));

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (int trial = 0; trial < 20; ++trial) {
        Vec q(2);
        q << u(rng), u(rng);
        const Vec r = one_hot2<double>(trial % 2);
        const Vec g = bce_loss_grad(q, r);
        CHECK(bce_loss(q, r) >= 0.0);
        for (int i = 0; i < 2; ++i) {
            Vec up = q, down = q;
            up[i] += kFdStep;
            down[i] -= kFdStep;
            const double num = (bce_loss(up, r) - bce_loss(down, r)) / (2 * kFdStep);
            CHECK(std::abs(num - g[i]) <= 1e-6);
        }
    }
}

TEST_CASE("finite difference oracle on closed forms") {
    ParamSet p;
    p.add("theta", Tensor::Constant(1, 1, 3.0));
    auto g = finite_diff_grad([](const ParamSet& q) { return q[0](0, 0) * q[0](0, 0); }, p, 1e-5);
    CHECK(std::abs(g[0](0, 0) - 6.0) <= 1e-6);

    p[0](0, 0) = 0.0;
    g = finite_diff_grad([](const ParamSet& q) { return std::sin(q[0](0, 0)); }, p, 1e-5);
    CHECK(std::abs(g[0](0, 0) - 1.0) <= 1e-9);

    CHECK_THROWS_AS(finite_diff_grad([](const ParamSet&) { return std::nan(""); }, p, 1e-5),
                    NumericalError);
    CHECK_THROWS_AS(finite_diff_grad([](const ParamSet&) { return 0.0; }, p, 0.0), DomainError);
}

TEST_CASE("parameter algebra") {
    std::mt19937_64 rng(8);
    auto p = lstm_params(3, 2);
    auto q = lstm_params(3, 2);
    fill_uniform(p, rng);
    fill_uniform(q, rng);

    CHECK(axpy(0.0, q, p) == p);
    CHECK(param_norm(zeros_like(p)) == 0.0);
    CHECK(param_norm(param_sub(p, p)) == 0.0);
    // (p - q) + q reproduces p to rounding, and the same bits every time it runs.
    const auto round_trip = param_add(param_sub(p, q), q);
    CHECK(max_relative_error(round_trip, p) < 1e-15);
    CHECK(param_add(param_sub(p, q), q) == round_trip);
    CHECK(param_scale(2.0, p) == param_add(p, p));

    ParamSet other;
    other.add("x", Tensor::Zero(1, 1));
    CHECK_THROWS_AS(param_sub(p, other), StructureError);
    CHECK_THROWS_AS(p.add("lstm.W", Tensor::Zero(1, 1)), StructureError);

    // layer names and order survive copies
    auto z = zeros_like(p);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(z.name(i) == p.name(i));
    CHECK(z.total_len() == p.total_len());
}

TEST_CASE("global norm clipping") {
    ParamSet g;
    g.add("a", Tensor::Constant(1, 2, 3.0));
    g.add("b", Tensor::Constant(2, 1, 4.0));
    const double pre = clip_global_norm(g, 5.0);
    CHECK(pre == doctest::Approx(std::sqrt(9 + 9 + 16 + 16)));
    CHECK(param_norm(g) == doctest::Approx(5.0).epsilon(1e-14));

    ParamSet small;
    small.add("a", Tensor::Constant(1, 1, 0.1));
    const ParamSet before = small;
    clip_global_norm(small, 5.0);
    CHECK(small == before);
    clip_global_norm(g, 0.0);  // disabled
    CHECK(param_norm(g) == doctest::Approx(5.0).epsilon(1e-14));
}
