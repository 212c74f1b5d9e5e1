#pragma once

// Rasch (1PL) fit on quiz responses and the FedIRT subgroup confidence.

#include <span>
#include <vector>

#include "hierfed/data/dataset.hpp"
#include "hierfed/models/sequences.hpp"

namespace hierfed::fed {

struct Response {
    int student = 0;
    int item = 0;
    int correct = 0;
};

struct RaschFit {
    std::vector<int> students;      // sorted ids
    std::vector<double> ability;    // parallel to students, in [-4, 4]
    std::vector<double> difficulty; // per item, centred at 0 over seen items
    int iterations = 0;

    double ability_of(int student) const;
    double prob(int student, int item) const;
};

inline constexpr double kAbilityBound = 4.0;

/// Alternating Newton/MLE: each round updates every ability given the
/// difficulties, then every difficulty given the abilities. Stops after
/// max_iter rounds or when no parameter moved more than tol.
RaschFit fit_rasch(std::span<const Response> responses, int num_items, int max_iter = 50,
                   double tol = 1e-6);

/// Mean predictive likelihood p^r (1-p)^(1-r) per subgroup under one Rasch
/// fit over all of them, normalised to sum 1. A subgroup without responses
/// gets likelihood 0.5.
std::vector<double> irt_confidence(const std::vector<std::vector<Response>>& per_subgroup,
                                   int num_items);

/// Quiz responses of `students` (first response per video), items indexed by
/// video slot.
std::vector<Response> quiz_responses(const data::Dataset& ds, const models::Vocab& vocab,
                                     std::span<const int> students);

}  // namespace hierfed::fed
