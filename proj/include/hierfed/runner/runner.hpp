#pragma once

// Experiment protocol: folds x repetitions, validation-based round/epoch
// selection, final test scoring with the strategy's adaptation, and the
// artifacts written by the CLI commands.

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hierfed/data/partition.hpp"
#include "hierfed/fed/engine.hpp"
#include "hierfed/metrics/metrics.hpp"
#include "hierfed/models/embedding_export.hpp"
#include "hierfed/models/objective.hpp"
#include "hierfed/runner/config.hpp"

namespace hierfed::runner {

/// Everything one fold needs: split, vocabulary (from training students
/// only), objective and the student groups.
struct FoldData {
    data::Partition partition;
    models::Vocab vocab;
    std::unique_ptr<models::Objective> objective;
    std::map<GroupKey, std::vector<int>> train;
    std::map<GroupKey, std::vector<int>> validation;
    std::map<GroupKey, std::vector<int>> test;
    std::map<GroupKey, std::vector<fed::Response>> responses;  // FedIRT only
};

FoldData prepare_fold(const ExperimentConfig& c, const data::Dataset& ds, const data::Partition& p);

struct RunRecord {
    int fold = 0;
    int repetition = 0;
    int selected_round = 0;
    std::optional<double> validation_auc;
    std::vector<double> history;
    metrics::RunAucs test;
    std::map<GroupKey, std::size_t> test_counts;
};

struct RunReport {
    nlohmann::json config;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string dataset_hash;
    std::string strategy;
    std::string task;
    Demographic variable = Demographic::None;
    std::vector<std::string> course_ids;
    std::vector<RunRecord> runs;
    metrics::SubgroupSummary summary;

    metrics::SummaryContext summary_context() const { return {course_ids, task, strategy}; }
};

nlohmann::json to_json(const RunReport& r);
RunReport report_from_json(const nlohmann::json& j);
RunReport load_report(const std::filesystem::path& path);

struct TrainOutcome {
    fed::TrainedBundle bundle;  // the selected round/epoch
    RunRecord record;
};

/// One training run: trains, keeps the round/epoch with the best
/// validation score (first one on ties) and, if asked, scores the test groups.
TrainOutcome train_one(const ExperimentConfig& c, const FoldData& fold, int fold_index, int repetition,
                       bool score_test = true);

/// Seed of one (fold, repetition) run, derived from the master seed.
std::uint64_t run_seed(const ExperimentConfig& c, int fold, int repetition);

/// Engine context for one run; the initial parameters come from the run seed.
fed::RunContext make_context(const ExperimentConfig& c, const FoldData& fold, std::uint64_t seed);

std::vector<data::Partition> make_partitions(const ExperimentConfig& c, const data::Dataset& ds);

/// Folds x repetitions over an already loaded dataset. No files written.
RunReport run_experiment(const ExperimentConfig& c, const data::Dataset& ds);

/// `train`: run_experiment plus artifacts in c.out: report.json,
/// summary.csv, checkpoints/fold<f>_rep<r>.json, timing.json.
RunReport cmd_train(const ExperimentConfig& c);

/// `evaluate`: rescores a saved checkpoint on its fold's test groups.
nlohmann::json cmd_evaluate(const ExperimentConfig& c, const std::filesystem::path& checkpoint);

struct GridResult {
    std::vector<std::string> params;
    std::vector<std::vector<nlohmann::json>> cells;  // one value list per cell
    std::vector<std::optional<double>> validation_auc;  // mean over folds x repetitions
    std::size_t best = 0;
    ExperimentConfig best_config;
    int trainings = 0;
};

/// `grid`: Cartesian product over {"param": [values...]} on validation AUC.
/// Accepts every hyperparameter plus "hidden".
GridResult run_grid(const ExperimentConfig& c, const data::Dataset& ds, const nlohmann::json& grid);
GridResult cmd_grid(const ExperimentConfig& c, const nlohmann::json& grid);

/// `export-embeddings`: OP only. Trains fold/repetition 0 (or loads the
/// checkpoint) and writes one row per usable test student to embeddings.csv.
std::vector<models::EmbeddingRow> export_embeddings(const ExperimentConfig& c, const data::Dataset& ds,
                                                    const std::optional<std::filesystem::path>& checkpoint);
void cmd_export_embeddings(const ExperimentConfig& c, const std::optional<std::filesystem::path>& checkpoint);

/// `report`: merges run reports (same dataset only) into comparison.csv and
/// comparison.md, plus one activity heatmap CSV per (course, subgroup).
void cmd_report(const std::vector<std::filesystem::path>& reports, const std::filesystem::path& out);
void write_comparison(const std::vector<RunReport>& reports, std::ostream& csv, std::ostream& md);

}  // namespace hierfed::runner
