#include "hierfed/fed/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

#include "hierfed/errors.hpp"

namespace hierfed::fed {

namespace {

void require_clients(std::span<const ClientState> clients, const char* what) {
    if (clients.empty()) throw DomainError(std::string(what) + ": no clients");
    for (const auto& c : clients) nn::check_congruent(clients.front().params, c.params);
}

void sgd_step(nn::ParamSet& params, const nn::GradSet& g, double eta) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= eta * g[i];
}

}  // namespace

std::vector<std::size_t> key_order(std::span<const ClientState> clients) {
    std::vector<std::size_t> idx(clients.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return clients[a].key < clients[b].key; });
    return idx;
}

std::vector<std::vector<int>> make_batches(std::span<const int> students, int batch_size, Rng& rng) {
    if (batch_size < 1) throw DomainError("batch size must be >= 1");
    std::vector<int> order(students.begin(), students.end());
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<int>> out;
    for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(batch_size)) {
        const auto end = std::min(order.size(), i + static_cast<std::size_t>(batch_size));
        out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return out;
}

nn::GradSet batch_gradient(const models::Objective& obj, const nn::ParamSet& params,
                           std::span<const int> batch, double clip_norm, double* loss) {
    nn::GradSet g = nn::zeros_like(params);
    const double l = obj.loss(batch, params, &g);
    if (!std::isfinite(l)) throw NumericalError("non-finite loss " + std::to_string(l));
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!g[i].allFinite()) throw NumericalError("non-finite gradient in layer '" + g.name(i) + "'");
    }
    nn::clip_global_norm(g, clip_norm);
    if (loss) *loss = l;
    return g;
}

double local_sgd_epoch(const models::Objective& obj, nn::ParamSet& params,
                       std::span<const int> students, double eta, int batch_size,
                       double clip_norm, Rng& rng) {
    if (students.empty()) throw DomainError("local_sgd_epoch: client has no students");
    double total = 0.0;
    for (const auto& batch : make_batches(students, batch_size, rng)) {
        double l = 0.0;
        const auto g = batch_gradient(obj, params, batch, clip_norm, &l);
        total += l;
        if (eta != 0.0) sgd_step(params, g, eta);
    }
    return total;
}

nn::ParamSet meta_update(const models::Objective& obj, const nn::ParamSet& theta,
                         std::span<const int> d, std::span<const int> d_prime, double eta,
                         double beta, double clip_norm, double* loss) {
    nn::ParamSet adapted = theta;
    if (beta != 0.0) sgd_step(adapted, batch_gradient(obj, theta, d, clip_norm), beta);
    const auto g = batch_gradient(obj, adapted, d_prime, clip_norm, loss);
    nn::ParamSet out = theta;
    if (eta != 0.0) sgd_step(out, g, eta);
    return out;
}

double meta_epoch(const models::Objective& obj, nn::ParamSet& params,
                  std::span<const int> students, double eta, double beta, int batch_size,
                  double clip_norm, Rng& rng) {
    if (students.empty()) throw DomainError("meta_epoch: client has no students");
    const auto batches = make_batches(students, batch_size, rng);
    if (batches.size() == 1) {
        spdlog::debug("meta step: {} students fit one batch, reusing it for both halves", students.size());
    }
    double total = 0.0;
    for (std::size_t i = 0; i < batches.size(); i += 2) {
        const auto& d = batches[i];
        const auto& dp = i + 1 < batches.size() ? batches[i + 1] : batches[0];
        double l = 0.0;
        params = meta_update(obj, params, d, dp, eta, beta, clip_norm, &l);
        total += l;
    }
    return total;
}

nn::ParamSet aggregate_weighted(std::span<const ClientState> clients, std::span<const double> w) {
    require_clients(clients, "aggregate_weighted");
    if (w.size() != clients.size()) throw ShapeError("aggregate_weighted: one weight per client");
    const auto order = key_order(clients);
    // Written as ref + sum w_c (p_c - ref) so identical clients give ref back
    // exactly, whatever the weights.
    const nn::ParamSet& ref = clients[order.front()].params;
    nn::ParamSet acc = nn::zeros_like(ref);
    for (std::size_t i : order) {
        for (std::size_t l = 0; l < acc.size(); ++l) acc[l] += w[i] * (clients[i].params[l] - ref[l]);
    }
    return nn::param_add(ref, acc);
}

nn::ParamSet aggregate_average(std::span<const ClientState> clients) {
    require_clients(clients, "aggregate_average");
    double n = 0.0;
    for (const auto& c : clients) n += static_cast<double>(c.size());
    if (!(n > 0)) throw DomainError("aggregate_average: clients hold no students");
    std::vector<double> w;
    for (const auto& c : clients) w.push_back(static_cast<double>(c.size()) / n);
    return aggregate_weighted(clients, w);
}

nn::Tensor attention_weights(const nn::ParamSet& server, std::span<const ClientState> clients,
                             AttentionMode mode) {
    require_clients(clients, "attention_weights");
    nn::check_congruent(server, clients.front().params);
    const auto order = key_order(clients);
    const auto nc = static_cast<Eigen::Index>(clients.size());
    const auto nl = static_cast<Eigen::Index>(server.size());
    nn::Tensor w(nc, nl);
    for (Eigen::Index l = 0; l < nl; ++l) {
        const auto li = static_cast<std::size_t>(l);
        nn::Vec d(nc);
        for (Eigen::Index r = 0; r < nc; ++r) {
            d(r) = (server[li] - clients[order[static_cast<std::size_t>(r)]].params[li]).norm();
        }
        const nn::Vec e = (d.array() - d.maxCoeff()).exp().matrix();
        w.col(l) = e / e.sum();
    }
    if (mode == AttentionMode::Scalar) {
        const nn::Vec a = w.rowwise().sum() / static_cast<double>(nl);
        for (Eigen::Index l = 0; l < nl; ++l) w.col(l) = a;
    }
    return w;
}

nn::ParamSet aggregate_attention(const nn::ParamSet& server, std::span<const ClientState> clients,
                                 double epsilon, AttentionMode mode) {
    const nn::Tensor w = attention_weights(server, clients, mode);
    const auto order = key_order(clients);
    nn::ParamSet pull = nn::zeros_like(server);
    for (std::size_t r = 0; r < order.size(); ++r) {
        const auto& p = clients[order[r]].params;
        for (std::size_t l = 0; l < pull.size(); ++l) {
            pull[l] += w(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(l)) * (server[l] - p[l]);
        }
    }
    return nn::axpy(-epsilon, pull, server);
}

Interpolated irt_interpolate(const nn::ParamSet& local_prev, const nn::ParamSet& global) {
    nn::check_congruent(local_prev, global);
    const double nl = nn::param_norm(local_prev), ng = nn::param_norm(global);
    double lambda = 0.0;
    if (nl == 0.0 || ng == 0.0) {
        spdlog::warn("irt_interpolate: zero-norm parameters, using lambda = 0");
    } else if (local_prev == global) {
        lambda = 1.0;
    } else {
        lambda = std::clamp(nn::param_dot(local_prev, global) / (nl * ng), 0.0, 1.0);
    }
    return {nn::axpy(lambda, nn::param_sub(local_prev, global), global), lambda};
}

}  // namespace hierfed::fed
