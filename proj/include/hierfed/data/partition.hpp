#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "hierfed/data/dataset.hpp"
#include "hierfed/group_key.hpp"
#include "hierfed/util/rng.hpp"

namespace hierfed::data {

/// One cross-validation fold. Index [c] holds course c's student ids, sorted.
struct Partition {
    int fold = 0;
    std::vector<std::vector<int>> train;
    std::vector<std::vector<int>> validation;
    std::vector<std::vector<int>> test;

    std::vector<int> all_train() const;
    std::vector<int> all_validation() const;
    std::vector<int> all_test() const;
};

/// Course-stratified k-fold split (test ~ 1/k of each course), with
/// `val_fraction` of each course's remaining students held out for validation.
std::vector<Partition> make_folds(const Dataset& ds, std::uint64_t seed, int num_folds = 5,
                                  double val_fraction = 0.2);

/// Subgroup value of a student for a variable, or nullopt if undisclosed.
std::optional<int> subgroup_of(const StudentRecord& s, Demographic variable);

/// Partitions `students` by (course, subgroup of `variable`). Students who did
/// not disclose the variable form an Unspecified subgroup when
/// include_unspecified is set and are dropped otherwise. With variable None
/// every student lands in its course's All group.
std::map<GroupKey, std::vector<int>> group_by_demographic(const Dataset& ds,
                                                          std::span<const int> students,
                                                          Demographic variable,
                                                          bool include_unspecified);

/// Samples min(per_group, |g|) students without replacement from every group.
/// The result is sorted ascending.
std::vector<int> stratified_batch(const std::vector<std::vector<int>>& groups, int per_group,
                                  Rng& rng);

}  // namespace hierfed::data
