#include "hierfed/data/partition.hpp"

#include <algorithm>
#include <cmath>

#include "hierfed/errors.hpp"

namespace hierfed::data {

namespace {
std::vector<int> concat(const std::vector<std::vector<int>>& parts) {
    std::vector<int> out;
    for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    std::sort(out.begin(), out.end());
    return out;
}
}  // namespace

std::vector<int> Partition::all_train() const { return concat(train); }
std::vector<int> Partition::all_validation() const { return concat(validation); }
std::vector<int> Partition::all_test() const { return concat(test); }

std::vector<Partition> make_folds(const Dataset& ds, std::uint64_t seed, int num_folds,
                                  double val_fraction) {
    if (num_folds < 2) throw ConfigError("need at least 2 folds");
    std::vector<Partition> folds(static_cast<std::size_t>(num_folds));
    for (int f = 0; f < num_folds; ++f) {
        auto& p = folds[static_cast<std::size_t>(f)];
        p.fold = f;
        p.train.resize(static_cast<std::size_t>(ds.num_courses()));
        p.validation.resize(p.train.size());
        p.test.resize(p.train.size());
    }
    for (int c = 0; c < ds.num_courses(); ++c) {
        std::vector<int> ids = ds.students_in_course(c);
        if (static_cast<int>(ids.size()) < num_folds) {
            throw ConfigError("course '" + ds.course_ids[static_cast<std::size_t>(c)] + "' has " +
                              std::to_string(ids.size()) + " students; " +
                              std::to_string(num_folds) + " folds need at least that many");
        }
        Rng rng = make_rng(seed, "folds", {static_cast<std::uint64_t>(c)});
        std::shuffle(ids.begin(), ids.end(), rng);
        const std::size_t n = ids.size();
        const auto k = static_cast<std::size_t>(num_folds);
        std::vector<std::size_t> bounds(k + 1);
        for (std::size_t f = 0; f <= k; ++f) bounds[f] = f * n / k;
        for (std::size_t f = 0; f < k; ++f) {
            std::vector<int> test(ids.begin() + static_cast<long>(bounds[f]),
                                  ids.begin() + static_cast<long>(bounds[f + 1]));
            std::vector<int> rest;
            for (std::size_t g = 0; g < k; ++g) {
                if (g == f) continue;
                rest.insert(rest.end(), ids.begin() + static_cast<long>(bounds[g]),
                            ids.begin() + static_cast<long>(bounds[g + 1]));
            }
            std::sort(rest.begin(), rest.end());
            Rng vr = make_rng(seed, "validation", {static_cast<std::uint64_t>(c), f});
            std::shuffle(rest.begin(), rest.end(), vr);
            const auto nval = static_cast<std::size_t>(
                std::llround(val_fraction * static_cast<double>(rest.size())));
            std::vector<int> val(rest.begin(), rest.begin() + static_cast<long>(nval));
            std::vector<int> train(rest.begin() + static_cast<long>(nval), rest.end());
            std::sort(test.begin(), test.end());
            std::sort(val.begin(), val.end());
            std::sort(train.begin(), train.end());
            auto& p = folds[f];
            p.test[static_cast<std::size_t>(c)] = std::move(test);
            p.validation[static_cast<std::size_t>(c)] = std::move(val);
            p.train[static_cast<std::size_t>(c)] = std::move(train);
        }
    }
    return folds;
}

std::optional<int> subgroup_of(const StudentRecord& s, Demographic variable) {
    switch (variable) {
        case Demographic::None: return kSubgroupAll;
        case Demographic::Gender:
            if (s.gender) return static_cast<int>(*s.gender);
            return std::nullopt;
        case Demographic::Continent:
            if (s.continent) return static_cast<int>(*s.continent);
            return std::nullopt;
        case Demographic::BirthYear:
            if (s.birth_year) return birth_year_bucket(*s.birth_year);
            return std::nullopt;
    }
    return std::nullopt;
}

std::map<GroupKey, std::vector<int>> group_by_demographic(const Dataset& ds,
                                                          std::span<const int> students,
                                                          Demographic variable,
                                                          bool include_unspecified) {
    std::map<GroupKey, std::vector<int>> groups;
    for (int id : students) {
        const auto& rec = ds.students[static_cast<std::size_t>(id)].info;
        auto sub = subgroup_of(rec, variable);
        if (!sub) {
            if (!include_unspecified) continue;
            sub = kSubgroupUnspecified;
        }
        groups[GroupKey{ds.course_of[static_cast<std::size_t>(id)], variable, *sub}].push_back(id);
    }
    for (auto& [_, ids] : groups) std::sort(ids.begin(), ids.end());
    return groups;
}

std::vector<int> stratified_batch(const std::vector<std::vector<int>>& groups, int per_group,
                                  Rng& rng) {
    if (per_group < 1) throw DomainError("per_group must be at least 1");
    std::vector<int> out;
    for (const auto& g : groups) {
        std::vector<int> pool = g;
        std::shuffle(pool.begin(), pool.end(), rng);
        const std::size_t take = std::min(pool.size(), static_cast<std::size_t>(per_group));
        out.insert(out.end(), pool.begin(), pool.begin() + static_cast<long>(take));
    }
    if (out.empty()) throw DomainError("stratified batch over empty subgroups");
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace hierfed::data
