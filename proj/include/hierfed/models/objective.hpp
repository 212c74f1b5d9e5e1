#pragma once

// A trainable objective over dataset students. The federated engine only
// sees this interface, so tests can drive it with closed-form surrogates.

#include <memory>
#include <span>
#include <vector>

#include "hierfed/models/model.hpp"
#include "hierfed/models/student_models.hpp"

namespace hierfed::models {

/// Predictions paired with their binary labels.
struct Scored {
    std::vector<double> scores;
    std::vector<int> labels;

    void append(const Scored& o) {
        scores.insert(scores.end(), o.scores.begin(), o.scores.end());
        labels.insert(labels.end(), o.labels.begin(), o.labels.end());
    }
    std::size_t size() const { return scores.size(); }
};

class Objective {
public:
    virtual ~Objective() = default;

    /// Summed loss over `students`; adds the gradient into `grad` when non-null.
    /// Students are visited in ascending id order whatever the input order.
    virtual double loss(std::span<const int> students, const nn::ParamSet& params,
                        nn::GradSet* grad) const = 0;

    /// Appends this student's predictions (probability of the positive class).
    virtual void score(int student, const nn::ParamSet& params, Scored& out) const = 0;

    /// Whether the student has a sequence for this task.
    virtual bool usable(int student) const = 0;

    virtual nn::ParamSet init(Rng& rng) const = 0;
};

class KtObjective final : public Objective {
public:
    KtObjective(const data::Dataset& ds, const Vocab& vocab, int hidden,
                std::size_t max_steps = kDefaultMaxSteps);

    double loss(std::span<const int> students, const nn::ParamSet& params,
                nn::GradSet* grad) const override;
    void score(int student, const nn::ParamSet& params, Scored& out) const override;
    bool usable(int student) const override;
    nn::ParamSet init(Rng& rng) const override { return init_params(spec_, rng); }

    const ModelSpec& spec() const { return spec_; }
    std::size_t excluded() const { return excluded_; }

private:
    struct Entry {
        std::vector<nn::OneHotInput> inputs;
        std::vector<int> responses;
    };
    ModelSpec spec_;
    std::vector<std::unique_ptr<Entry>> entries_;  // by dataset student index
    std::size_t excluded_ = 0;
};

class OpObjective final : public Objective {
public:
    OpObjective(const data::Dataset& ds, const Vocab& vocab, int hidden,
                std::size_t max_steps = kDefaultMaxSteps);

    double loss(std::span<const int> students, const nn::ParamSet& params,
                nn::GradSet* grad) const override;
    void score(int student, const nn::ParamSet& params, Scored& out) const override;
    bool usable(int student) const override;
    nn::ParamSet init(Rng& rng) const override { return init_params(spec_, rng); }

    nn::Vec embedding(int student, const nn::ParamSet& params) const;
    const ModelSpec& spec() const { return spec_; }
    std::size_t excluded() const { return excluded_; }

private:
    struct Entry {
        std::vector<nn::OneHotInput> inputs;
        int outcome = 0;
    };
    ModelSpec spec_;
    std::vector<std::unique_ptr<Entry>> entries_;
    std::size_t excluded_ = 0;
};

std::unique_ptr<Objective> make_objective(Task task, const data::Dataset& ds, const Vocab& vocab,
                                          int hidden, std::size_t max_steps = kDefaultMaxSteps);

}  // namespace hierfed::models
