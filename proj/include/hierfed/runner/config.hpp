#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "hierfed/data/dataset.hpp"
#include "hierfed/fed/strategy.hpp"
#include "hierfed/group_key.hpp"
#include "hierfed/models/sequences.hpp"

namespace hierfed::runner {

inline constexpr int kSchemaVersion = 1;

/// One experiment: data source, task, strategy, hyperparameters, protocol.
///
/// JSON layout (every key optional except where noted):
///   { "schema_version": 1,
///     "data": {"dataset": "<dir>"} or {"preset": "<name>", "synth": {...}},
///     "task": "kt" | "op", "strategy": "sc2-P-AT-B",
///     "demographic": "gender" | "continent" | "age", "include_unspecified": false,
///     "model": {"hidden": 48, "max_steps": 512},
///     "hyperparameters": {"eta": .., "beta": .., "epsilon": .., "rounds": ..,
///                         "local_iters": .., "epochs": .., "batch_size": ..,
///                         "strat_per_group": .., "clip_norm": .., "attention_mode": ..},
///     "protocol": {"num_folds": 5, "folds": [0], "repetitions": 5, "val_fraction": 0.2,
///                  "selection": "group_mean" | "pooled"},
///     "seed": 0, "out": "out", "workers": 1 }
/// How a round/epoch is scored on validation: the mean of the per-group AUCs
/// (what the reports summarize) or one AUC over all pooled predictions.
enum class Selection { GroupMean, Pooled };

std::string to_string(Selection s);
Selection parse_selection(const std::string& s);

struct ExperimentConfig {
    std::string dataset;  // directory holding events.csv and students.csv
    std::string preset;   // synthgen preset, used when dataset is empty
    nlohmann::json synth = nlohmann::json::object();  // overrides on top of the preset

    models::Task task = models::Task::KT;
    std::string strategy = "sc2-P-AT-B";
    Demographic demographic = Demographic::Gender;
    bool include_unspecified = false;

    int hidden = 48;
    int max_steps = 512;
    fed::StrategyConfig hyper;  // only the hyperparameter fields are used

    int num_folds = 5;
    std::vector<int> folds = {0};
    int repetitions = 5;
    double val_fraction = 0.2;
    Selection selection = Selection::GroupMean;

    std::uint64_t seed = 0;
    std::string out = "out";
    int workers = 1;

    /// Strategy structure from the name, hyperparameters from `hyper`.
    fed::StrategyConfig strategy_config() const;
    /// Scenario I trains per course, so its groups ignore the demographic.
    Demographic group_variable() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical form. Output location and worker count are left out: neither
/// changes results, so neither enters the hash.
nlohmann::json to_json(const ExperimentConfig& c);
std::string config_hash(const ExperimentConfig& c);

/// Range and consistency checks; throws ConfigError.
void validate(const ExperimentConfig& c);

/// HIERFED_SEED, when set, replaces the configured seed.
void apply_env_overrides(ExperimentConfig& c);

/// Ingests `dataset` or generates the preset (seeded by the master seed
/// unless the synth overrides name one).
data::Dataset load_dataset(const ExperimentConfig& c);

std::string hex64(std::uint64_t v);

}  // namespace hierfed::runner
