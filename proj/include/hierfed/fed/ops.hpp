#pragma once

// Client-side updates and server-side aggregation rules.

#include <span>
#include <vector>

#include "hierfed/fed/strategy.hpp"
#include "hierfed/group_key.hpp"
#include "hierfed/models/objective.hpp"
#include "hierfed/nn/param_set.hpp"
#include "hierfed/util/rng.hpp"

namespace hierfed::fed {

struct ClientState {
    GroupKey key;
    nn::ParamSet params;
    std::vector<int> students;  // training students, ascending

    std::size_t size() const { return students.size(); }
};

/// Shuffles `students` with rng and cuts them into batches of batch_size
/// (the last one may be short).
std::vector<std::vector<int>> make_batches(std::span<const int> students, int batch_size, Rng& rng);

/// Gradient of the summed loss over `batch` at `params`, clipped to clip_norm
/// (0 disables). Throws NumericalError on a non-finite loss or gradient.
nn::GradSet batch_gradient(const models::Objective& obj, const nn::ParamSet& params,
                           std::span<const int> batch, double clip_norm, double* loss = nullptr);

/// One pass of minibatch SGD over `students`. Returns the summed pre-step
/// batch losses. eta == 0 leaves params untouched.
double local_sgd_epoch(const models::Objective& obj, nn::ParamSet& params,
                       std::span<const int> students, double eta, int batch_size,
                       double clip_norm, Rng& rng);

/// First-order meta step:
///   adapted = theta - beta * grad f_D(theta)
///   theta+  = theta - eta  * grad f_D'(adapted)
/// beta == 0 skips the inner step, so the result is a plain SGD step on D'.
nn::ParamSet meta_update(const models::Objective& obj, const nn::ParamSet& theta,
                         std::span<const int> d, std::span<const int> d_prime, double eta,
                         double beta, double clip_norm, double* loss = nullptr);

/// One local meta iteration: shuffled batches taken in consecutive pairs
/// (D, D'). An odd trailing batch pairs with the first one; a client with a
/// single batch reuses it for both halves (logged once per call).
double meta_epoch(const models::Objective& obj, nn::ParamSet& params,
                  std::span<const int> students, double eta, double beta, int batch_size,
                  double clip_norm, Rng& rng);

/// sum_c (N_c / N) params_c, accumulated in ascending key order.
nn::ParamSet aggregate_average(std::span<const ClientState> clients);

/// sum_c w_c params_c with w given in client order (not key order); the
/// weights should sum to 1.
nn::ParamSet aggregate_weighted(std::span<const ClientState> clients, std::span<const double> w);

/// Attention weights, clients (ascending key) x layers. Each column is a
/// softmax over clients of ||server(l) - client(l)||. In scalar mode every
/// column holds alpha_c = mean over layers of those softmax values.
nn::Tensor attention_weights(const nn::ParamSet& server, std::span<const ClientState> clients,
                             AttentionMode mode);

/// server - epsilon * sum_c alpha_c (server - client_c), per layer.
nn::ParamSet aggregate_attention(const nn::ParamSet& server, std::span<const ClientState> clients,
                                 double epsilon, AttentionMode mode);

struct Interpolated {
    nn::ParamSet params;
    double lambda = 0.0;
};

/// global + lambda (local - global), lambda = cosine(local, global) clamped
/// to [0, 1]; 0 when either operand has zero norm.
Interpolated irt_interpolate(const nn::ParamSet& local_prev, const nn::ParamSet& global);

/// Client indices in ascending key order.
std::vector<std::size_t> key_order(std::span<const ClientState> clients);

}  // namespace hierfed::fed
