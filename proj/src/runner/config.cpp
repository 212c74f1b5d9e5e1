#include "hierfed/runner/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "hierfed/errors.hpp"
#include "hierfed/synth/synthgen.hpp"
#include "hierfed/util/rng.hpp"

namespace hierfed::runner {

namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [k, _] : j.items()) {
        if (!allowed.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
    }
}

std::string demographic_key(Demographic d) {
    switch (d) {
        case Demographic::Gender: return "gender";
        case Demographic::Continent: return "continent";
        case Demographic::BirthYear: return "age";
        case Demographic::None: return "none";
    }
    return "none";
}

}  // namespace

std::string to_string(Selection s) { return s == Selection::Pooled ? "pooled" : "group_mean"; }

Selection parse_selection(const std::string& s) {
    if (s == "group_mean") return Selection::GroupMean;
    if (s == "pooled") return Selection::Pooled;
    throw ConfigError("unknown selection '" + s + "' (known: group_mean, pooled)");
}

std::string hex64(std::uint64_t v) { return fmt::format("{:016x}", v); }

fed::StrategyConfig ExperimentConfig::strategy_config() const {
    fed::StrategyConfig s = fed::parse_strategy(strategy);
    fed::apply_hyperparams(fed::hyperparams_to_json(hyper), s);
    return s;
}

Demographic ExperimentConfig::group_variable() const {
    return fed::parse_strategy(strategy).scenario == fed::Scenario::SC1 ? Demographic::None : demographic;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    reject_unknown(j, {"schema_version", "data", "task", "strategy", "demographic", "include_unspecified", "model",
                       "hyperparameters", "protocol", "seed", "out", "workers"},
                   "config");
    ExperimentConfig c;
    try {
        const int version = j.value("schema_version", kSchemaVersion);
        if (version != kSchemaVersion) {
            throw ConfigError("config schema_version " + std::to_string(version) + " is not supported");
        }
        if (j.contains("data")) {
            const auto& d = j.at("data");
            reject_unknown(d, {"dataset", "preset", "synth"}, "data");
            c.dataset = d.value("dataset", "");
            c.preset = d.value("preset", "");
            c.synth = d.value("synth", nlohmann::json::object());
        }
        if (j.contains("task")) c.task = models::parse_task(j.at("task").get<std::string>());
        c.strategy = j.value("strategy", c.strategy);
        if (j.contains("demographic")) c.demographic = parse_demographic(j.at("demographic").get<std::string>());
        c.include_unspecified = j.value("include_unspecified", c.include_unspecified);
        if (j.contains("model")) {
            const auto& m = j.at("model");
            reject_unknown(m, {"hidden", "max_steps"}, "model");
            c.hidden = m.value("hidden", c.hidden);
            c.max_steps = m.value("max_steps", c.max_steps);
        }
        if (j.contains("hyperparameters")) {
            const auto& h = j.at("hyperparameters");
            reject_unknown(h, {"eta", "beta", "epsilon", "rounds", "local_iters", "epochs", "batch_size",
                               "strat_per_group", "clip_norm", "attention_mode"},
                           "hyperparameters");
            fed::apply_hyperparams(h, c.hyper);
        }
        if (j.contains("protocol")) {
            const auto& p = j.at("protocol");
            reject_unknown(p, {"num_folds", "folds", "repetitions", "val_fraction", "selection"}, "protocol");
            c.num_folds = p.value("num_folds", c.num_folds);
            c.folds = p.value("folds", c.folds);
            c.repetitions = p.value("repetitions", c.repetitions);
            c.val_fraction = p.value("val_fraction", c.val_fraction);
            if (p.contains("selection")) c.selection = parse_selection(p.at("selection").get<std::string>());
        }
        c.seed = j.value("seed", c.seed);
        c.out = j.value("out", c.out);
        c.workers = j.value("workers", c.workers);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    try {
        return config_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
}

nlohmann::json to_json(const ExperimentConfig& c) {
    nlohmann::json data = nlohmann::json::object();
    if (!c.dataset.empty()) data["dataset"] = c.dataset;
    if (!c.preset.empty()) data["preset"] = c.preset;
    if (!c.synth.empty()) data["synth"] = c.synth;
    return {{"schema_version", kSchemaVersion},
            {"data", data},
            {"task", models::task_name(c.task)},
            {"strategy", c.strategy},
            {"demographic", demographic_key(c.demographic)},
            {"include_unspecified", c.include_unspecified},
            {"model", {{"hidden", c.hidden}, {"max_steps", c.max_steps}}},
            {"hyperparameters", fed::hyperparams_to_json(c.hyper)},
            {"protocol",
             {{"num_folds", c.num_folds},
              {"folds", c.folds},
              {"repetitions", c.repetitions},
              {"val_fraction", c.val_fraction},
              {"selection", to_string(c.selection)}}},
            {"seed", c.seed}};
}

std::string config_hash(const ExperimentConfig& c) { return hex64(fnv1a64(to_json(c).dump())); }

void validate(const ExperimentConfig& c) {
    auto bad = [](const std::string& m) { throw ConfigError("config: " + m); };
    const auto s = c.strategy_config();
    fed::validate(s);
    if (c.dataset.empty() == c.preset.empty()) bad("exactly one of data.dataset and data.preset must be set");
    if (!c.dataset.empty() && !c.synth.empty()) bad("data.synth only applies to presets");
    if (c.hidden < 1) bad("model.hidden must be >= 1");
    if (c.max_steps < 2) bad("model.max_steps must be >= 2");
    if (c.num_folds < 2) bad("protocol.num_folds must be >= 2");
    if (c.folds.empty()) bad("protocol.folds must name at least one fold");
    for (int f : c.folds) {
        if (f < 0 || f >= c.num_folds) bad("fold " + std::to_string(f) + " out of range");
    }
    if (c.repetitions < 1) bad("protocol.repetitions must be >= 1");
    if (!(c.val_fraction > 0.0 && c.val_fraction < 1.0)) bad("protocol.val_fraction must be in (0, 1)");
    if (c.workers < 1) bad("workers must be >= 1");
    if (s.scenario == fed::Scenario::SC2 && c.demographic == Demographic::None) {
        bad("scenario II needs a demographic variable");
    }
}

void apply_env_overrides(ExperimentConfig& c) {
    if (const char* v = std::getenv("HIERFED_SEED"); v && *v) {
        char* end = nullptr;
        const auto seed = std::strtoull(v, &end, 10);
        if (*end != '\0') throw ConfigError(std::string("HIERFED_SEED is not an unsigned integer: ") + v);
        c.seed = seed;
    }
}

data::Dataset load_dataset(const ExperimentConfig& c) {
    if (!c.dataset.empty()) {
        const std::filesystem::path dir(c.dataset);
        return data::ingest(dir / "events.csv", dir / "students.csv");
    }
    nlohmann::json g = synth::to_json(synth::preset(c.preset));
    g["seed"] = c.seed;
    for (const auto& [k, v] : c.synth.items()) g[k] = v;
    return synth::generate(synth::gen_config_from_json(g));
}

}  // namespace hierfed::runner
