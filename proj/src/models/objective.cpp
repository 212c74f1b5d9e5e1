#include "hierfed/models/objective.hpp"

#include <algorithm>

#include "hierfed/errors.hpp"

namespace hierfed::models {

namespace {

std::vector<int> ascending(std::span<const int> students) {
    std::vector<int> ids(students.begin(), students.end());
    std::sort(ids.begin(), ids.end());
    return ids;
}

template <typename Entry>
const Entry& lookup(const std::vector<std::unique_ptr<Entry>>& entries, int student) {
    if (student < 0 || static_cast<std::size_t>(student) >= entries.size() ||
        !entries[static_cast<std::size_t>(student)]) {
        throw DomainError("student " + std::to_string(student) + " has no sequence for this task");
    }
    return *entries[static_cast<std::size_t>(student)];
}

}  // namespace

KtObjective::KtObjective(const data::Dataset& ds, const Vocab& vocab, int hidden,
                         std::size_t max_steps)
    : spec_(make_model_spec(Task::KT, vocab, hidden)), entries_(ds.students.size()) {
    for (auto& seq : build_kt_sequences(ds, vocab, max_steps, &excluded_)) {
        auto e = std::make_unique<Entry>();
        for (const auto& s : seq.steps) {
            e->inputs.push_back(kt_input(s, vocab));
            e->responses.push_back(s.response);
        }
        entries_[static_cast<std::size_t>(seq.student)] = std::move(e);
    }
}

double KtObjective::loss(std::span<const int> students, const nn::ParamSet& params,
                         nn::GradSet* grad) const {
    double total = 0.0;
    for (int id : ascending(students)) {
        const auto& e = lookup(entries_, id);
        total += kt_sequence_loss(e.inputs, e.responses, params, grad);
    }
    return total;
}

void KtObjective::score(int student, const nn::ParamSet& params, Scored& out) const {
    const auto& e = lookup(entries_, student);
    const KtTrace trace = kt_forward(e.inputs, params);
    for (std::size_t t = 0; t < trace.probs.size(); ++t) {
        out.scores.push_back(trace.probs[t][1]);
        out.labels.push_back(e.responses[t + 1]);
    }
}

bool KtObjective::usable(int student) const {
    return student >= 0 && static_cast<std::size_t>(student) < entries_.size() &&
           entries_[static_cast<std::size_t>(student)] != nullptr;
}

OpObjective::OpObjective(const data::Dataset& ds, const Vocab& vocab, int hidden,
                         std::size_t max_steps)
    : spec_(make_model_spec(Task::OP, vocab, hidden)), entries_(ds.students.size()) {
    for (auto& seq : build_op_sequences(ds, vocab, max_steps, &excluded_)) {
        auto e = std::make_unique<Entry>();
        for (const auto& s : seq.steps) e->inputs.push_back(activity_input(s, vocab));
        e->outcome = seq.outcome;
        entries_[static_cast<std::size_t>(seq.student)] = std::move(e);
    }
}

double OpObjective::loss(std::span<const int> students, const nn::ParamSet& params,
                         nn::GradSet* grad) const {
    double total = 0.0;
    for (int id : ascending(students)) {
        const auto& e = lookup(entries_, id);
        total += op_sequence_loss(e.inputs, e.outcome, params, grad);
    }
    return total;
}

void OpObjective::score(int student, const nn::ParamSet& params, Scored& out) const {
    const auto& e = lookup(entries_, student);
    out.scores.push_back(op_forward(e.inputs, params).probs[1]);
    out.labels.push_back(e.outcome);
}

bool OpObjective::usable(int student) const {
    return student >= 0 && static_cast<std::size_t>(student) < entries_.size() &&
           entries_[static_cast<std::size_t>(student)] != nullptr;
}

nn::Vec OpObjective::embedding(int student, const nn::ParamSet& params) const {
    return op_forward(lookup(entries_, student).inputs, params).embedding();
}

std::unique_ptr<Objective> make_objective(Task task, const data::Dataset& ds, const Vocab& vocab,
                                          int hidden, std::size_t max_steps) {
    if (task == Task::KT) return std::make_unique<KtObjective>(ds, vocab, hidden, max_steps);
    return std::make_unique<OpObjective>(ds, vocab, hidden, max_steps);
}

}  // namespace hierfed::models
