#pragma once

#include <string>

#include <json.hpp>

namespace hierfed::fed {

enum class Scenario { SC1, SC2 };
// L: one model per client, no federation. G: a single shared model (trained
// centrally or federated). P: federated meta-learned initialisation, adapted
// per course/subgroup at evaluation. FedIRT gets its own tag.
enum class Architecture { L, G, P, FedIRT };
enum class Aggregation { None, AV, AT, IRT };
// Scenario II evaluation level: B personalises down to the subgroup, M stops
// at the course model, T uses the top-level global model.
enum class Hierarchy { None, B, M, T };
enum class AttentionMode { Layerwise, Scalar };

struct StrategyConfig {
    Scenario scenario = Scenario::SC1;
    Architecture architecture = Architecture::G;
    Aggregation aggregation = Aggregation::None;
    Hierarchy hierarchy = Hierarchy::None;

    double eta = 0.05;    // local / meta step
    double beta = -1.0;   // inner adaptation step; negative means "same as eta"
    double epsilon = 1.0; // server step for attention aggregation
    int rounds = 10;      // K
    int local_iters = 5;  // E
    int epochs = 50;      // non-federated training
    int batch_size = 16;
    int strat_per_group = 4;
    double clip_norm = 5.0;  // 0 disables
    AttentionMode attention_mode = AttentionMode::Layerwise;

    bool federated() const { return architecture != Architecture::L && aggregation != Aggregation::None; }
    double inner_step() const { return beta < 0 ? eta : beta; }
    std::string name() const;
};

/// Parses "sc1-P-AT", "sc2-G-AV-T", "sc2-FedIRT", "sc1-L", ... Hyperparameters
/// keep their defaults. Malformed names raise ConfigError naming the position.
StrategyConfig parse_strategy(const std::string& name);

/// Checks ranges (eta, epsilon > 0; K, E >= 1; ...). Throws ConfigError.
void validate(const StrategyConfig& s);

/// Hyperparameters only; the structural fields come from the name.
nlohmann::json hyperparams_to_json(const StrategyConfig& s);
void apply_hyperparams(const nlohmann::json& j, StrategyConfig& s);

std::string to_string(AttentionMode m);

}  // namespace hierfed::fed
