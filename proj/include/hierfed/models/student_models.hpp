#pragma once

// The two downstream models.
//
// Knowledge tracing: an LSTM reads the interaction encodings; after step t
// the output head predicts whether the response at step t+1 is correct. The
// first response is never a target, so a length-L sequence yields L-1 terms.
//
// Outcome prediction: a GRU reads the activity encodings, attention pools
// the hidden states, and the output head predicts pass/fail.

#include <span>
#include <utility>
#include <vector>

#include "hierfed/models/model.hpp"
#include "hierfed/nn/layers.hpp"

namespace hierfed::models {

struct KtTrace {
    std::vector<nn::LstmCache<double, nn::OneHotInput>> steps;
    std::vector<nn::Vec> probs;  // probs[t] predicts response t+1
};

KtTrace kt_forward(std::span<const nn::OneHotInput> inputs, const nn::ParamSet& params);
KtTrace kt_forward(const InteractionSeq& seq, const Vocab& vocab, const nn::ParamSet& params);

/// Loss of one sequence; accumulates its gradient into `grad` when non-null.
double kt_sequence_loss(std::span<const nn::OneHotInput> inputs, std::span<const int> responses,
                        const nn::ParamSet& params, nn::GradSet* grad);

/// Summed loss over a batch (students in ascending id order) and its gradient.
std::pair<double, nn::GradSet> kt_loss(std::span<const InteractionSeq> batch, const Vocab& vocab,
                                       const nn::ParamSet& params);

struct OpTrace {
    std::vector<nn::GruCache<double, nn::OneHotInput>> steps;
    nn::AttentionCache<double> attention;
    nn::Vec probs;

    const nn::Vec& embedding() const { return attention.pooled; }
    const nn::Vec& alphas() const { return attention.alpha; }
};

OpTrace op_forward(std::span<const nn::OneHotInput> inputs, const nn::ParamSet& params);
OpTrace op_forward(const ActivitySeq& seq, const Vocab& vocab, const nn::ParamSet& params);

double op_sequence_loss(std::span<const nn::OneHotInput> inputs, int outcome,
                        const nn::ParamSet& params, nn::GradSet* grad);

std::pair<double, nn::GradSet> op_loss(std::span<const ActivitySeq> batch, const Vocab& vocab,
                                       const nn::ParamSet& params);

/// Pooled hidden state after attention; identical to op_forward's.
nn::Vec extract_embedding(const ActivitySeq& seq, const Vocab& vocab, const nn::ParamSet& params);

}  // namespace hierfed::models
