#pragma once

// Training loops for every strategy and evaluation-time adaptation.
//
// Clients are keyed by GroupKey: course-level keys in scenario I, subgroup
// keys in scenario II. Within a round every client trains independently on
// its own RNG substream; aggregation walks clients in ascending key order.

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "hierfed/fed/irt.hpp"
#include "hierfed/fed/ops.hpp"
#include "hierfed/fed/strategy.hpp"
#include "hierfed/models/objective.hpp"

namespace hierfed::fed {

struct TrainedBundle {
    nn::ParamSet global;
    std::map<int, nn::ParamSet> course;
    // Per-client models: course keys for scenario I local training, subgroup
    // keys otherwise.
    std::map<GroupKey, nn::ParamSet> local;
    std::vector<double> history;  // mean training loss per student, per round (or epoch)
    int aggregations = 0;
    std::map<GroupKey, int> local_iterations;
};

struct RunContext {
    const models::Objective* objective = nullptr;
    std::map<GroupKey, std::vector<int>> clients;  // training students per client
    nn::ParamSet init;
    std::uint64_t seed = 0;
    int workers = 1;
    // FedIRT only: quiz responses per client and the item count.
    std::map<GroupKey, std::vector<Response>> responses;
    int num_items = 0;
    // Called after every round (federated) or epoch with the 0-based index.
    std::function<void(int, const TrainedBundle&)> on_round;
};

/// Algorithm-1 style loop; every client key must be course-level.
TrainedBundle run_scenario1(const StrategyConfig& s, const RunContext& ctx);

/// Two-level loop over subgroup clients. A course with a single subgroup
/// passes its client model through unchanged and skips course adaptation,
/// so one course with one subgroup retraces run_scenario1.
TrainedBundle run_scenario2(const StrategyConfig& s, const RunContext& ctx);

/// Subgroup clients initialised by cosine interpolation between their last
/// local model and the global one; per course, models combine with Rasch
/// confidences; courses are averaged by size.
TrainedBundle run_fedirt(const StrategyConfig& s, const RunContext& ctx);

/// One model trained on the pooled students of every client.
TrainedBundle run_centralized(const StrategyConfig& s, const RunContext& ctx);

/// One independent model per client.
TrainedBundle run_local(const StrategyConfig& s, const RunContext& ctx);

/// Dispatches on the strategy.
TrainedBundle train(const StrategyConfig& s, const RunContext& ctx);

/// The model each group is scored with, after the strategy's adaptation
/// (see evaluate_adapted). Groups without a usable model are left out.
std::map<GroupKey, nn::ParamSet> adapted_models(const StrategyConfig& s, const TrainedBundle& bundle,
                                                const RunContext& ctx, const std::vector<GroupKey>& keys);

/// Scores the students of each evaluation group with the model the strategy
/// prescribes, after adaptation:
///   sc1-P      one local epoch from the global model on the course's training data
///   sc2-P-M    one meta step from the global model on stratified course batches
///   sc2-P-B    as M, then one local epoch on the subgroup's training data
///   sc2-G-*-M  the aggregated course model
///   L, FedIRT  the client's own model
///   otherwise  the global model, unadapted
/// Local epochs here step with the inner size beta: the meta objective is the
/// loss after a beta step, so that is the step the global model is fit for.
/// Groups without students, or without a model to use, are skipped with a warning.
std::map<GroupKey, models::Scored> evaluate_adapted(const StrategyConfig& s,
                                                    const TrainedBundle& bundle,
                                                    const RunContext& ctx,
                                                    const std::map<GroupKey, std::vector<int>>& eval_groups);

}  // namespace hierfed::fed
