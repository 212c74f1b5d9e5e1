#pragma once

// Forward and backward kernels for the layers used by the student models.
// Every forward returns a cache; the matching backward consumes it and
// accumulates parameter gradients into caller-owned tensors.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "hierfed/errors.hpp"
#include "hierfed/nn/param_set.hpp"

namespace hierfed::nn {

/// Sparse 0/1 input vector: the positions of its ones. Encoded activities are
/// concatenations of one-hot blocks, so projecting them is a column sum.
struct OneHotInput {
    std::vector<int> active;
    int dim = 0;
};

inline Eigen::Index input_dim(const OneHotInput& x) { return x.dim; }
template <typename Scalar>
Eigen::Index input_dim(const VecT<Scalar>& x) {
    return x.size();
}

template <typename Scalar>
VecT<Scalar> to_dense(const OneHotInput& x) {
    VecT<Scalar> v = VecT<Scalar>::Zero(x.dim);
    for (int j : x.active) v[j] = Scalar(1);
    return v;
}

template <typename Scalar>
void add_projection(const TensorT<Scalar>& W, const VecT<Scalar>& x, VecT<Scalar>& out) {
    out.noalias() += W * x;
}
template <typename Scalar>
void add_projection(const TensorT<Scalar>& W, const OneHotInput& x, VecT<Scalar>& out) {
    for (int j : x.active) out += W.col(j);
}

template <typename Scalar>
void add_outer(TensorT<Scalar>& dW, const VecT<Scalar>& delta, const VecT<Scalar>& x) {
    dW.noalias() += delta * x.transpose();
}
template <typename Scalar>
void add_outer(TensorT<Scalar>& dW, const VecT<Scalar>& delta, const OneHotInput& x) {
    for (int j : x.active) dW.col(j) += delta;
}

template <typename Scalar>
Scalar sigmoid(Scalar v) {
    return Scalar(1) / (Scalar(1) + std::exp(-v));
}

template <typename Derived>
auto sigmoid_vec(const Eigen::MatrixBase<Derived>& v) {
    using S = typename Derived::Scalar;
    return v.unaryExpr([](S a) { return sigmoid(a); });
}

namespace detail {

template <typename Scalar>
void expect_shape(const TensorT<Scalar>& t, Eigen::Index rows, Eigen::Index cols,
                  const std::string& layer) {
    if (t.rows() != rows || t.cols() != cols) {
        throw ShapeError("layer '" + layer + "' has shape " + std::to_string(t.rows()) + "x" +
                         std::to_string(t.cols()) + ", expected " + std::to_string(rows) + "x" +
                         std::to_string(cols));
    }
}

template <typename Scalar>
void expect_len(const VecT<Scalar>& v, Eigen::Index n, const std::string& what) {
    if (v.size() != n) {
        throw ShapeError(what + " has length " + std::to_string(v.size()) + ", expected " +
                         std::to_string(n));
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// LSTM. Gate rows are stacked [input; forget; candidate; output].

template <typename Scalar>
struct LstmView {
    const TensorT<Scalar>* W;  // 4k x in
    const TensorT<Scalar>* U;  // 4k x k
    const TensorT<Scalar>* b;  // 4k x 1
    std::string prefix;
    Eigen::Index hidden() const { return U->cols(); }
    Eigen::Index input() const { return W->cols(); }
};

template <typename Scalar>
LstmView<Scalar> lstm_view(const ParamSetT<Scalar>& p, const std::string& prefix) {
    const auto& U = p.at(prefix + ".U");
    const auto& W = p.at(prefix + ".W");
    const auto& b = p.at(prefix + ".b");
    const Eigen::Index k = U.cols();
    detail::expect_shape(U, 4 * k, k, prefix + ".U");
    detail::expect_shape(W, 4 * k, W.cols(), prefix + ".W");
    detail::expect_shape(b, 4 * k, 1, prefix + ".b");
    return {&W, &U, &b, prefix};
}

template <typename Scalar, typename Input>
struct LstmCache {
    Input x;
    VecT<Scalar> h_prev, c_prev;
    VecT<Scalar> i, f, g, o;
    VecT<Scalar> c, tanh_c, h;
};

template <typename Scalar, typename Input>
LstmCache<Scalar, Input> lstm_cell(const Input& x, const VecT<Scalar>& h_prev,
                                   const VecT<Scalar>& c_prev, const LstmView<Scalar>& w) {
    const Eigen::Index k = w.hidden();
    if (input_dim(x) != w.input()) {
        throw ShapeError("layer '" + w.prefix + ".W' expects input of size " +
                         std::to_string(w.input()) + ", got " + std::to_string(input_dim(x)));
    }
    detail::expect_len(h_prev, k, w.prefix + " h_prev");
    detail::expect_len(c_prev, k, w.prefix + " c_prev");

    VecT<Scalar> z = *w.b;
    z.noalias() += *w.U * h_prev;
    add_projection(*w.W, x, z);

    LstmCache<Scalar, Input> cache{x, h_prev, c_prev, {}, {}, {}, {}, {}, {}, {}};
    cache.i = sigmoid_vec(z.segment(0, k));
    cache.f = sigmoid_vec(z.segment(k, k));
    cache.g = z.segment(2 * k, k).array().tanh();
    cache.o = sigmoid_vec(z.segment(3 * k, k));
    cache.c = cache.f.cwiseProduct(c_prev) + cache.i.cwiseProduct(cache.g);
    cache.tanh_c = cache.c.array().tanh();
    cache.h = cache.o.cwiseProduct(cache.tanh_c);
    return cache;
}

template <typename Scalar>
struct LstmGrads {
    TensorT<Scalar>* W;
    TensorT<Scalar>* U;
    TensorT<Scalar>* b;
};

template <typename Scalar>
LstmGrads<Scalar> lstm_grads(ParamSetT<Scalar>& g, const std::string& prefix) {
    return {&g.at(prefix + ".W"), &g.at(prefix + ".U"), &g.at(prefix + ".b")};
}

/// dh, dc: gradients flowing into this step's h and c. Writes the gradients
/// for the previous step's h and c.
template <typename Scalar, typename Input>
void lstm_cell_backward(const LstmCache<Scalar, Input>& cache, const VecT<Scalar>& dh,
                        const VecT<Scalar>& dc_in, const LstmView<Scalar>& w,
                        LstmGrads<Scalar>& grads, VecT<Scalar>& dh_prev, VecT<Scalar>& dc_prev) {
    const Eigen::Index k = w.hidden();
    const auto one = Scalar(1);
    VecT<Scalar> dc = dc_in.array() + dh.array() * cache.o.array() *
                                          (one - cache.tanh_c.array().square());
    VecT<Scalar> dz(4 * k);
    dz.segment(0, k) = dc.array() * cache.g.array() * cache.i.array() * (one - cache.i.array());
    dz.segment(k, k) =
        dc.array() * cache.c_prev.array() * cache.f.array() * (one - cache.f.array());
    dz.segment(2 * k, k) = dc.array() * cache.i.array() * (one - cache.g.array().square());
    dz.segment(3 * k, k) =
        dh.array() * cache.tanh_c.array() * cache.o.array() * (one - cache.o.array());

    dc_prev = dc.cwiseProduct(cache.f);
    dh_prev.noalias() = w.U->transpose() * dz;
    add_outer(*grads.W, dz, cache.x);
    grads.U->noalias() += dz * cache.h_prev.transpose();
    *grads.b += dz;
}

// ---------------------------------------------------------------------------
// GRU. Gate rows are stacked [update z; reset r; candidate n].
//   h = (1 - z) * h_prev + z * n,  n = tanh(W_n x + U_n (r * h_prev) + b_n)

template <typename Scalar>
struct GruView {
    const TensorT<Scalar>* W;  // 3k x in
    const TensorT<Scalar>* U;  // 3k x k
    const TensorT<Scalar>* b;  // 3k x 1
    std::string prefix;
    Eigen::Index hidden() const { return U->cols(); }
    Eigen::Index input() const { return W->cols(); }
};

template <typename Scalar>
GruView<Scalar> gru_view(const ParamSetT<Scalar>& p, const std::string& prefix) {
    const auto& U = p.at(prefix + ".U");
    const auto& W = p.at(prefix + ".W");
    const auto& b = p.at(prefix + ".b");
    const Eigen::Index k = U.cols();
    detail::expect_shape(U, 3 * k, k, prefix + ".U");
    detail::expect_shape(W, 3 * k, W.cols(), prefix + ".W");
    detail::expect_shape(b, 3 * k, 1, prefix + ".b");
    return {&W, &U, &b, prefix};
}

template <typename Scalar, typename Input>
struct GruCache {
    Input x;
    VecT<Scalar> h_prev;
    VecT<Scalar> z, r, n, rh;
    VecT<Scalar> h;
};

template <typename Scalar, typename Input>
GruCache<Scalar, Input> gru_cell(const Input& x, const VecT<Scalar>& h_prev,
                                 const GruView<Scalar>& w) {
    const Eigen::Index k = w.hidden();
    if (input_dim(x) != w.input()) {
        throw ShapeError("layer '" + w.prefix + ".W' expects input of size " +
                         std::to_string(w.input()) + ", got " + std::to_string(input_dim(x)));
    }
    detail::expect_len(h_prev, k, w.prefix + " h_prev");

    VecT<Scalar> a = *w.b;
    add_projection(*w.W, x, a);
    const auto& U = *w.U;

    GruCache<Scalar, Input> cache{x, h_prev, {}, {}, {}, {}, {}};
    VecT<Scalar> zr = a.segment(0, 2 * k);
    zr.noalias() += U.topRows(2 * k) * h_prev;
    cache.z = sigmoid_vec(zr.segment(0, k));
    cache.r = sigmoid_vec(zr.segment(k, k));
    cache.rh = cache.r.cwiseProduct(h_prev);
    VecT<Scalar> an = a.segment(2 * k, k);
    an.noalias() += U.bottomRows(k) * cache.rh;
    cache.n = an.array().tanh();
    cache.h = (Scalar(1) - cache.z.array()) * h_prev.array() + cache.z.array() * cache.n.array();
    return cache;
}

template <typename Scalar>
struct GruGrads {
    TensorT<Scalar>* W;
    TensorT<Scalar>* U;
    TensorT<Scalar>* b;
};

template <typename Scalar>
GruGrads<Scalar> gru_grads(ParamSetT<Scalar>& g, const std::string& prefix) {
    return {&g.at(prefix + ".W"), &g.at(prefix + ".U"), &g.at(prefix + ".b")};
}

template <typename Scalar, typename Input>
void gru_cell_backward(const GruCache<Scalar, Input>& cache, const VecT<Scalar>& dh,
                       const GruView<Scalar>& w, GruGrads<Scalar>& grads,
                       VecT<Scalar>& dh_prev) {
    const Eigen::Index k = w.hidden();
    const auto one = Scalar(1);
    const auto& U = *w.U;

    VecT<Scalar> da(3 * k);
    VecT<Scalar> dan = dh.array() * cache.z.array() * (one - cache.n.array().square());
    da.segment(0, k) = dh.array() * (cache.n.array() - cache.h_prev.array()) *
                       cache.z.array() * (one - cache.z.array());
    VecT<Scalar> drh = U.bottomRows(k).transpose() * dan;
    da.segment(k, k) =
        drh.array() * cache.h_prev.array() * cache.r.array() * (one - cache.r.array());
    da.segment(2 * k, k) = dan;

    dh_prev = dh.array() * (one - cache.z.array()) + drh.array() * cache.r.array();
    dh_prev.noalias() += U.topRows(2 * k).transpose() * da.segment(0, 2 * k);

    add_outer(*grads.W, da, cache.x);
    grads.U->topRows(2 * k).noalias() += da.segment(0, 2 * k) * cache.h_prev.transpose();
    grads.U->bottomRows(k).noalias() += dan * cache.rh.transpose();
    *grads.b += da;
}

// ---------------------------------------------------------------------------
// Additive self-attention pooling over a hidden-state sequence.
//   e_t = p' tanh(W h_t),  alpha = softmax(e),  pooled = sum_t alpha_t h_t
// A single query vector p is shared by every time step.

template <typename Scalar>
struct AttentionView {
    const TensorT<Scalar>* W;  // a x k
    const TensorT<Scalar>* p;  // a x 1
    std::string prefix;
};

template <typename Scalar>
AttentionView<Scalar> attention_view(const ParamSetT<Scalar>& params, const std::string& prefix) {
    const auto& W = params.at(prefix + ".W");
    const auto& p = params.at(prefix + ".p");
    detail::expect_shape(p, W.rows(), 1, prefix + ".p");
    return {&W, &p, prefix};
}

template <typename Scalar>
struct AttentionCache {
    TensorT<Scalar> H;       // k x T, one column per step
    TensorT<Scalar> act;     // a x T, tanh(W H)
    VecT<Scalar> alpha;      // T
    VecT<Scalar> pooled;     // k
};

template <typename Scalar>
VecT<Scalar> softmax(const VecT<Scalar>& z) {
    VecT<Scalar> e = (z.array() - z.maxCoeff()).exp();
    return e / e.sum();
}

template <typename Scalar>
AttentionCache<Scalar> self_attention_pool(const std::vector<VecT<Scalar>>& h_seq,
                                           const AttentionView<Scalar>& w) {
    if (h_seq.empty()) throw DomainError("attention pooling over an empty sequence");
    const Eigen::Index k = h_seq.front().size();
    const Eigen::Index T = static_cast<Eigen::Index>(h_seq.size());
    detail::expect_shape(*w.W, w.W->rows(), k, w.prefix + ".W");

    AttentionCache<Scalar> cache;
    cache.H.resize(k, T);
    for (Eigen::Index t = 0; t < T; ++t) {
        detail::expect_len(h_seq[static_cast<std::size_t>(t)], k, "attention input");
        cache.H.col(t) = h_seq[static_cast<std::size_t>(t)];
    }
    cache.act = (*w.W * cache.H).array().tanh();
    VecT<Scalar> e = cache.act.transpose() * *w.p;
    cache.alpha = softmax(e);
    cache.pooled = cache.H * cache.alpha;
    return cache;
}

template <typename Scalar>
struct AttentionGrads {
    TensorT<Scalar>* W;
    TensorT<Scalar>* p;
};

template <typename Scalar>
AttentionGrads<Scalar> attention_grads(ParamSetT<Scalar>& g, const std::string& prefix) {
    return {&g.at(prefix + ".W"), &g.at(prefix + ".p")};
}

/// Returns dL/dH (k x T) given dL/dpooled.
template <typename Scalar>
TensorT<Scalar> self_attention_backward(const AttentionCache<Scalar>& cache,
                                        const VecT<Scalar>& dpooled,
                                        const AttentionView<Scalar>& w,
                                        AttentionGrads<Scalar>& grads) {
    TensorT<Scalar> dH = dpooled * cache.alpha.transpose();
    VecT<Scalar> dalpha = cache.H.transpose() * dpooled;
    const Scalar mean = cache.alpha.dot(dalpha);
    VecT<Scalar> de = cache.alpha.array() * (dalpha.array() - mean);

    *grads.p += cache.act * de;
    TensorT<Scalar> dact =
        ((*w.p) * de.transpose()).array() * (Scalar(1) - cache.act.array().square());
    grads.W->noalias() += dact * cache.H.transpose();
    dH.noalias() += w.W->transpose() * dact;
    return dH;
}

// ---------------------------------------------------------------------------
// Two-way output head: softmax(W' h + b) with W stored k x 2.

template <typename Scalar>
VecT<Scalar> linear_softmax(const VecT<Scalar>& h, const TensorT<Scalar>& W,
                            const TensorT<Scalar>& b) {
    if (W.rows() != h.size() || W.cols() != 2) {
        throw ShapeError("output weight has shape " + std::to_string(W.rows()) + "x" +
                         std::to_string(W.cols()) + ", expected " + std::to_string(h.size()) +
                         "x2");
    }
    if (b.size() != 2) throw ShapeError("output bias must have length 2");
    VecT<Scalar> z = W.transpose() * h;
    z += Eigen::Map<const VecT<Scalar>>(b.data(), 2);
    return softmax(z);
}

/// Backward through linear_softmax. Accumulates into dW, db; returns dL/dh.
template <typename Scalar>
VecT<Scalar> linear_softmax_backward(const VecT<Scalar>& h, const VecT<Scalar>& probs,
                                     const VecT<Scalar>& dprobs, const TensorT<Scalar>& W,
                                     TensorT<Scalar>& dW, TensorT<Scalar>& db) {
    VecT<Scalar> dz = probs.array() * (dprobs.array() - probs.dot(dprobs));
    dW.noalias() += h * dz.transpose();
    Eigen::Map<VecT<Scalar>>(db.data(), 2) += dz;
    return W * dz;
}

inline constexpr double kProbClamp = 1e-7;

/// Cross entropy -sum r log p against a one-hot target, with p clamped to
/// [1e-7, 1 - 1e-7].
template <typename Scalar>
Scalar bce_loss(const VecT<Scalar>& p, const VecT<Scalar>& target) {
    if (p.size() != target.size()) throw ShapeError("prediction/target length mismatch");
    const Scalar lo = Scalar(kProbClamp), hi = Scalar(1) - Scalar(kProbClamp);
    Scalar loss = 0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (target[i] != Scalar(0)) loss -= target[i] * std::log(std::clamp(p[i], lo, hi));
    }
    return loss;
}

/// dL/dp for bce_loss. Zero where the clamp is active.
template <typename Scalar>
VecT<Scalar> bce_loss_grad(const VecT<Scalar>& p, const VecT<Scalar>& target) {
    const Scalar lo = Scalar(kProbClamp), hi = Scalar(1) - Scalar(kProbClamp);
    VecT<Scalar> g = VecT<Scalar>::Zero(p.size());
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (target[i] != Scalar(0) && p[i] > lo && p[i] < hi) g[i] = -target[i] / p[i];
    }
    return g;
}

template <typename Scalar>
VecT<Scalar> one_hot2(int label) {
    VecT<Scalar> r = VecT<Scalar>::Zero(2);
    r[label != 0 ? 1 : 0] = Scalar(1);
    return r;
}

}  // namespace hierfed::nn
