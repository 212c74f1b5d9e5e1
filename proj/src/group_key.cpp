#include "hierfed/group_key.hpp"

#include <array>

#include "hierfed/errors.hpp"

namespace hierfed {

namespace {
constexpr std::array<const char*, 2> kGender{"M", "F"};
constexpr std::array<const char*, 5> kContinent{"AS", "AF", "EU", "NA", "SA"};
constexpr std::array<const char*, 3> kBirthYear{"~80", "80~90", "90~"};
}  // namespace

std::string demographic_name(Demographic d) {
    switch (d) {
        case Demographic::None: return "none";
        case Demographic::Gender: return "gender";
        case Demographic::Continent: return "continent";
        case Demographic::BirthYear: return "age";
    }
    return "none";
}

Demographic parse_demographic(const std::string& s) {
    if (s == "gender") return Demographic::Gender;
    if (s == "continent") return Demographic::Continent;
    if (s == "age" || s == "birth_year") return Demographic::BirthYear;
    if (s == "none" || s.empty()) return Demographic::None;
    throw ConfigError("unknown demographic variable '" + s + "'");
}

int subgroup_count(Demographic d) {
    switch (d) {
        case Demographic::None: return 1;
        case Demographic::Gender: return static_cast<int>(kGender.size());
        case Demographic::Continent: return static_cast<int>(kContinent.size());
        case Demographic::BirthYear: return static_cast<int>(kBirthYear.size());
    }
    return 1;
}

std::string subgroup_label(Demographic d, int subgroup) {
    if (subgroup == kSubgroupAll) return "All";
    if (subgroup == kSubgroupUnspecified) return "Unspecified";
    if (subgroup < 0 || subgroup >= subgroup_count(d)) return "?";
    switch (d) {
        case Demographic::Gender: return kGender[static_cast<std::size_t>(subgroup)];
        case Demographic::Continent: return kContinent[static_cast<std::size_t>(subgroup)];
        case Demographic::BirthYear: return kBirthYear[static_cast<std::size_t>(subgroup)];
        case Demographic::None: break;
    }
    return "?";
}

std::optional<int> parse_subgroup(Demographic d, const std::string& label) {
    if (label == "All") return kSubgroupAll;
    if (label == "Unspecified") return kSubgroupUnspecified;
    for (int i = 0; i < subgroup_count(d); ++i) {
        if (d != Demographic::None && subgroup_label(d, i) == label) return i;
    }
    return std::nullopt;
}

int birth_year_bucket(int year) {
    if (year < 1980) return 0;
    if (year < 1990) return 1;
    return 2;
}

}  // namespace hierfed
