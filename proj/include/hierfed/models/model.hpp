#pragma once

#include "hierfed/models/encoding.hpp"
#include "hierfed/nn/param_set.hpp"
#include "hierfed/util/rng.hpp"

namespace hierfed::models {

struct ModelSpec {
    Task task = Task::KT;
    int hidden = 48;
    int input_dim = 0;
};

ModelSpec make_model_spec(Task task, const Vocab& vocab, int hidden = 48);

/// Weights uniform in +-1/sqrt(fan_in), biases zero.
///   KT: lstm.W lstm.U lstm.b out.W out.b
///   OP: gru.W gru.U gru.b attn.W attn.p out.W out.b
nn::ParamSet init_params(const ModelSpec& spec, Rng& rng);
nn::ParamSet zero_params(const ModelSpec& spec);

}  // namespace hierfed::models
