#include "hierfed/fed/strategy.hpp"

#include <vector>

#include "hierfed/errors.hpp"

namespace hierfed::fed {

namespace {

struct Token {
    std::string text;
    std::size_t pos;
};

std::vector<Token> tokenize(const std::string& s) {
    std::vector<Token> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == '-') {
            out.push_back({s.substr(start, i - start), start});
            start = i + 1;
        }
    }
    return out;
}

[[noreturn]] void reject(const std::string& name, std::size_t pos, const std::string& why) {
    throw ConfigError("strategy '" + name + "' at position " + std::to_string(pos) + ": " + why);
}

}  // namespace

std::string StrategyConfig::name() const {
    std::string s = scenario == Scenario::SC1 ? "sc1" : "sc2";
    if (architecture == Architecture::FedIRT) return s + "-FedIRT";
    s += architecture == Architecture::L ? "-L" : architecture == Architecture::G ? "-G" : "-P";
    if (aggregation == Aggregation::AV) s += "-AV";
    if (aggregation == Aggregation::AT) s += "-AT";
    if (hierarchy == Hierarchy::B) s += "-B";
    if (hierarchy == Hierarchy::M) s += "-M";
    if (hierarchy == Hierarchy::T) s += "-T";
    return s;
}

StrategyConfig parse_strategy(const std::string& name) {
    const auto tok = tokenize(name);
    StrategyConfig c;
    if (tok[0].text == "sc1") {
        c.scenario = Scenario::SC1;
    } else if (tok[0].text == "sc2") {
        c.scenario = Scenario::SC2;
    } else {
        reject(name, 0, "expected scenario sc1 or sc2, got '" + tok[0].text + "'");
    }
    const bool sc2 = c.scenario == Scenario::SC2;
    if (tok.size() < 2) reject(name, name.size(), "missing architecture");

    const Token& arch = tok[1];
    if (arch.text == "FedIRT") {
        if (!sc2) reject(name, arch.pos, "FedIRT is a scenario II baseline");
        if (tok.size() > 2) reject(name, tok[2].pos, "unexpected token after FedIRT");
        c.architecture = Architecture::FedIRT;
        c.aggregation = Aggregation::IRT;
        return c;
    }
    if (arch.text == "L") {
        c.architecture = Architecture::L;
    } else if (arch.text == "G") {
        c.architecture = Architecture::G;
    } else if (arch.text == "P") {
        c.architecture = Architecture::P;
    } else {
        reject(name, arch.pos, "expected architecture L, G, P or FedIRT, got '" + arch.text + "'");
    }

    if (tok.size() == 2) {
        // Non-federated: local models, or one centrally trained model.
        if (c.architecture == Architecture::P) reject(name, name.size(), "P needs an aggregation (AV or AT)");
        return c;
    }
    if (c.architecture == Architecture::L) reject(name, tok[2].pos, "L takes no aggregation");

    const Token& agg = tok[2];
    if (agg.text == "AV") {
        c.aggregation = Aggregation::AV;
    } else if (agg.text == "AT") {
        c.aggregation = Aggregation::AT;
    } else {
        reject(name, agg.pos, "expected aggregation AV or AT, got '" + agg.text + "'");
    }

    if (!sc2) {
        if (tok.size() > 3) reject(name, tok[3].pos, "scenario I takes no hierarchy level");
        return c;
    }
    if (tok.size() < 4) reject(name, name.size(), "scenario II needs a hierarchy level");
    if (tok.size() > 4) reject(name, tok[4].pos, "unexpected trailing token");
    const Token& h = tok[3];
    if (c.architecture == Architecture::G) {
        if (h.text == "M") {
            c.hierarchy = Hierarchy::M;
        } else if (h.text == "T") {
            c.hierarchy = Hierarchy::T;
        } else {
            reject(name, h.pos, "G expects hierarchy M or T, got '" + h.text + "'");
        }
    } else {
        if (h.text == "M") {
            c.hierarchy = Hierarchy::M;
        } else if (h.text == "B") {
            c.hierarchy = Hierarchy::B;
        } else {
            reject(name, h.pos, "P expects hierarchy M or B, got '" + h.text + "'");
        }
    }
    return c;
}

void validate(const StrategyConfig& s) {
    auto bad = [&](const std::string& m) { throw ConfigError("strategy " + s.name() + ": " + m); };
    if (!(s.eta > 0)) bad("eta must be > 0");
    if (!(s.epsilon > 0)) bad("epsilon must be > 0");
    if (s.beta >= 0 && !(s.beta > 0)) bad("beta must be > 0");
    if (s.rounds < 1) bad("rounds (K) must be >= 1");
    if (s.local_iters < 1) bad("local_iters (E) must be >= 1");
    if (s.epochs < 1) bad("epochs must be >= 1");
    if (s.batch_size < 1) bad("batch_size must be >= 1");
    if (s.strat_per_group < 1) bad("strat_per_group must be >= 1");
    if (!(s.clip_norm >= 0)) bad("clip_norm must be >= 0");
}

std::string to_string(AttentionMode m) { return m == AttentionMode::Layerwise ? "layerwise" : "scalar"; }

nlohmann::json hyperparams_to_json(const StrategyConfig& s) {
    return {{"eta", s.eta},
            {"beta", s.inner_step()},
            {"epsilon", s.epsilon},
            {"rounds", s.rounds},
            {"local_iters", s.local_iters},
            {"epochs", s.epochs},
            {"batch_size", s.batch_size},
            {"strat_per_group", s.strat_per_group},
            {"clip_norm", s.clip_norm},
            {"attention_mode", to_string(s.attention_mode)}};
}

void apply_hyperparams(const nlohmann::json& j, StrategyConfig& s) {
    try {
        s.eta = j.value("eta", s.eta);
        s.beta = j.value("beta", s.beta);
        s.epsilon = j.value("epsilon", s.epsilon);
        s.rounds = j.value("rounds", s.rounds);
        s.local_iters = j.value("local_iters", s.local_iters);
        s.epochs = j.value("epochs", s.epochs);
        s.batch_size = j.value("batch_size", s.batch_size);
        s.strat_per_group = j.value("strat_per_group", s.strat_per_group);
        s.clip_norm = j.value("clip_norm", s.clip_norm);
        if (j.contains("attention_mode")) {
            const auto m = j.at("attention_mode").get<std::string>();
            if (m == "layerwise") {
                s.attention_mode = AttentionMode::Layerwise;
            } else if (m == "scalar") {
                s.attention_mode = AttentionMode::Scalar;
            } else {
                throw ConfigError("attention_mode must be layerwise or scalar");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("hyperparameters: ") + e.what());
    }
}

}  // namespace hierfed::fed
