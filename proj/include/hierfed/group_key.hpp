#pragma once

#include <compare>
#include <optional>
#include <string>

namespace hierfed {

enum class Demographic { None = 0, Gender = 1, Continent = 2, BirthYear = 3 };

/// Subgroup codes. Real buckets are small nonnegative ordinals within their
/// variable; these two are the special values.
inline constexpr int kSubgroupAll = -1;
inline constexpr int kSubgroupUnspecified = 1000;

/// Identity of a training client: a course (scenario I, variable None) or a
/// demographic subgroup within a course (scenario II).
struct GroupKey {
    int course = 0;
    Demographic variable = Demographic::None;
    int subgroup = kSubgroupAll;

    auto operator<=>(const GroupKey&) const = default;

    static GroupKey course_level(int c) { return {c, Demographic::None, kSubgroupAll}; }
};

std::string demographic_name(Demographic d);
Demographic parse_demographic(const std::string& s);

int subgroup_count(Demographic d);
std::string subgroup_label(Demographic d, int subgroup);
std::optional<int> parse_subgroup(Demographic d, const std::string& label);

/// Birth-year bucket: [..1979] -> 0, [1980..1989] -> 1, [1990..] -> 2.
int birth_year_bucket(int year);

}  // namespace hierfed
