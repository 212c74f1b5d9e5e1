#include "hierfed/models/student_models.hpp"

#include <algorithm>
#include <numeric>

#include "hierfed/errors.hpp"

namespace hierfed::models {

namespace {

std::vector<nn::OneHotInput> kt_inputs(const InteractionSeq& seq, const Vocab& vocab) {
    std::vector<nn::OneHotInput> xs;
    xs.reserve(seq.steps.size());
    for (const auto& s : seq.steps) xs.push_back(kt_input(s, vocab));
    return xs;
}

std::vector<nn::OneHotInput> op_inputs(const ActivitySeq& seq, const Vocab& vocab) {
    std::vector<nn::OneHotInput> xs;
    xs.reserve(seq.steps.size());
    for (const auto& s : seq.steps) xs.push_back(activity_input(s, vocab));
    return xs;
}

template <typename Seq>
std::vector<const Seq*> sorted_by_student(std::span<const Seq> batch) {
    std::vector<const Seq*> order;
    order.reserve(batch.size());
    for (const auto& s : batch) order.push_back(&s);
    std::stable_sort(order.begin(), order.end(),
                     [](const Seq* a, const Seq* b) { return a->student < b->student; });
    return order;
}

}  // namespace

KtTrace kt_forward(std::span<const nn::OneHotInput> inputs, const nn::ParamSet& params) {
    if (inputs.empty()) throw DomainError("knowledge tracing over an empty sequence");
    const auto lstm = nn::lstm_view(params, "lstm");
    const auto& W = params.at("out.W");
    const auto& b = params.at("out.b");
    const Eigen::Index k = lstm.hidden();

    KtTrace trace;
    // The final step has no successor to predict, so it is never run.
    const std::size_t n = inputs.size() - 1;
    trace.steps.reserve(n);
    trace.probs.reserve(n);
    nn::Vec h = nn::Vec::Zero(k), c = nn::Vec::Zero(k);
    for (std::size_t t = 0; t < n; ++t) {
        trace.steps.push_back(nn::lstm_cell(inputs[t], h, c, lstm));
        h = trace.steps.back().h;
        c = trace.steps.back().c;
        trace.probs.push_back(nn::linear_softmax(h, W, b));
    }
    return trace;
}

KtTrace kt_forward(const InteractionSeq& seq, const Vocab& vocab, const nn::ParamSet& params) {
    const auto xs = kt_inputs(seq, vocab);
    return kt_forward(xs, params);
}

double kt_sequence_loss(std::span<const nn::OneHotInput> inputs, std::span<const int> responses,
                        const nn::ParamSet& params, nn::GradSet* grad) {
    if (inputs.size() != responses.size()) throw ShapeError("inputs/responses length mismatch");
    const KtTrace trace = kt_forward(inputs, params);
    const std::size_t n = trace.probs.size();
    double loss = 0.0;
    std::vector<nn::Vec> targets(n);
    for (std::size_t t = 0; t < n; ++t) {
        targets[t] = nn::one_hot2<double>(responses[t + 1]);
        loss += nn::bce_loss(trace.probs[t], targets[t]);
    }
    if (!grad || n == 0) return loss;

    const auto lstm = nn::lstm_view(params, "lstm");
    const auto& W = params.at("out.W");
    auto lg = nn::lstm_grads(*grad, "lstm");
    auto& dW = grad->at("out.W");
    auto& db = grad->at("out.b");
    const Eigen::Index k = lstm.hidden();
    nn::Vec dh_next = nn::Vec::Zero(k), dc_next = nn::Vec::Zero(k);
    nn::Vec dh_prev(k), dc_prev(k);
    for (std::size_t t = n; t-- > 0;) {
        const auto& step = trace.steps[t];
        const nn::Vec dp = nn::bce_loss_grad(trace.probs[t], targets[t]);
        nn::Vec dh = nn::linear_softmax_backward(step.h, trace.probs[t], dp, W, dW, db);
        dh += dh_next;
        nn::lstm_cell_backward(step, dh, dc_next, lstm, lg, dh_prev, dc_prev);
        dh_next.swap(dh_prev);
        dc_next.swap(dc_prev);
    }
    return loss;
}

std::pair<double, nn::GradSet> kt_loss(std::span<const InteractionSeq> batch, const Vocab& vocab,
                                       const nn::ParamSet& params) {
    if (batch.empty()) throw DomainError("empty batch");
    nn::GradSet grad = nn::zeros_like(params);
    double loss = 0.0;
    for (const InteractionSeq* seq : sorted_by_student(batch)) {
        const auto xs = kt_inputs(*seq, vocab);
        std::vector<int> rs;
        rs.reserve(seq->steps.size());
        for (const auto& s : seq->steps) rs.push_back(s.response);
        loss += kt_sequence_loss(xs, rs, params, &grad);
    }
    return {loss, std::move(grad)};
}

OpTrace op_forward(std::span<const nn::OneHotInput> inputs, const nn::ParamSet& params) {
    if (inputs.empty()) throw DomainError("outcome prediction over an empty sequence");
    const auto gru = nn::gru_view(params, "gru");
    const auto att = nn::attention_view(params, "attn");
    OpTrace trace;
    trace.steps.reserve(inputs.size());
    std::vector<nn::Vec> hs;
    hs.reserve(inputs.size());
    nn::Vec h = nn::Vec::Zero(gru.hidden());
    for (const auto& x : inputs) {
        trace.steps.push_back(nn::gru_cell(x, h, gru));
        h = trace.steps.back().h;
        hs.push_back(h);
    }
    trace.attention = nn::self_attention_pool(hs, att);
    trace.probs = nn::linear_softmax(trace.attention.pooled, params.at("out.W"), params.at("out.b"));
    return trace;
}

OpTrace op_forward(const ActivitySeq& seq, const Vocab& vocab, const nn::ParamSet& params) {
    const auto xs = op_inputs(seq, vocab);
    return op_forward(xs, params);
}

double op_sequence_loss(std::span<const nn::OneHotInput> inputs, int outcome,
                        const nn::ParamSet& params, nn::GradSet* grad) {
    const OpTrace trace = op_forward(inputs, params);
    const nn::Vec target = nn::one_hot2<double>(outcome);
    const double loss = nn::bce_loss(trace.probs, target);
    if (!grad) return loss;

    const auto gru = nn::gru_view(params, "gru");
    const auto att = nn::attention_view(params, "attn");
    auto gg = nn::gru_grads(*grad, "gru");
    auto ag = nn::attention_grads(*grad, "attn");
    const nn::Vec dp = nn::bce_loss_grad(trace.probs, target);
    const nn::Vec dpooled =
        nn::linear_softmax_backward(trace.attention.pooled, trace.probs, dp, params.at("out.W"),
                                    grad->at("out.W"), grad->at("out.b"));
    const nn::Tensor dH = nn::self_attention_backward(trace.attention, dpooled, att, ag);
    const Eigen::Index k = gru.hidden();
    nn::Vec dh_next = nn::Vec::Zero(k), dh_prev(k);
    for (std::size_t t = trace.steps.size(); t-- > 0;) {
        nn::Vec dh = dH.col(static_cast<Eigen::Index>(t));
        dh += dh_next;
        nn::gru_cell_backward(trace.steps[t], dh, gru, gg, dh_prev);
        dh_next.swap(dh_prev);
    }
    return loss;
}

std::pair<double, nn::GradSet> op_loss(std::span<const ActivitySeq> batch, const Vocab& vocab,
                                       const nn::ParamSet& params) {
    if (batch.empty()) throw DomainError("empty batch");
    nn::GradSet grad = nn::zeros_like(params);
    double loss = 0.0;
    for (const ActivitySeq* seq : sorted_by_student(batch)) {
        const auto xs = op_inputs(*seq, vocab);
        loss += op_sequence_loss(xs, seq->outcome, params, &grad);
    }
    return {loss, std::move(grad)};
}

nn::Vec extract_embedding(const ActivitySeq& seq, const Vocab& vocab, const nn::ParamSet& params) {
    return op_forward(seq, vocab, params).embedding();
}

}  // namespace hierfed::models
