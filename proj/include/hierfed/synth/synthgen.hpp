#pragma once

// Synthetic heterogeneous course data.
//
// Each (course, subgroup) archetype blends a course-wide base behaviour with
// a subgroup-specific one by the heterogeneity knob tau:
//   transitions  T_x = (1 - tau) B + tau S_x   over videos, forum actions
//   difficulties d_x = (1 - tau) d_base + tau d_x_spec
// A student draws an ability, walks the chain (stopping with a fixed hazard),
// answers the quiz after the first view of each video with a Rasch
// probability, and passes when the expected score over all course items plus
// an engagement bonus clears the threshold (then flipped with label noise).

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "hierfed/data/dataset.hpp"
#include "hierfed/group_key.hpp"
#include "hierfed/nn/param_set.hpp"

namespace hierfed::synth {

inline constexpr int kGeneratorVersion = 1;

struct GenConfig {
    std::string name = "custom";
    int courses = 1;
    int students_per_course = 100;
    int videos_per_course = 10;
    // The variable whose subgroups get distinct archetypes. The other
    // demographic fields are filled independently of behaviour.
    Demographic archetype_variable = Demographic::Gender;
    std::vector<double> shares;          // per subgroup; empty = equal
    std::vector<double> ability_means;   // per subgroup; empty = all 0
    double ability_std = 1.0;
    double undisclosed_fraction = 0.0;
    double tau = 0.0;
    double difficulty_std = 1.0;
    double stop_prob = 0.04;  // per-event hazard of ending the session
    int max_events = 80;
    double pass_threshold = 0.5;
    double label_noise = 0.05;
    std::uint64_t seed = 0;
};

nlohmann::json to_json(const GenConfig& c);
GenConfig gen_config_from_json(const nlohmann::json& j);

/// Named, versioned presets: balanced-small, heterogeneous-3course,
/// imbalanced-minority.
GenConfig preset(const std::string& name);
std::vector<std::string> preset_names();

/// One (course, subgroup) behaviour. States 0..V-1 are videos, V..V+2 the
/// forum actions (post, reply, view).
struct Archetype {
    nn::Tensor transition;  // (V+3) x (V+3), rows sum to 1
    nn::Vec start;          // V+3
    nn::Vec difficulty;     // V
    double ability_mean = 0.0;
    double ability_std = 1.0;
    double share = 0.0;
};

struct CourseArchetypes {
    std::vector<Archetype> subgroups;
};

std::vector<CourseArchetypes> build_archetypes(const GenConfig& c);

void validate(const GenConfig& c);

struct Generated {
    data::Dataset dataset;
    std::vector<std::vector<int>> true_subgroup;  // [course][student within course]
};

Generated generate_full(const GenConfig& c);
data::Dataset generate(const GenConfig& c);

/// Writes events.csv, students.csv and manifest.json into `dir`.
void write_generated(const GenConfig& c, const data::Dataset& ds, const std::filesystem::path& dir);

}  // namespace hierfed::synth
