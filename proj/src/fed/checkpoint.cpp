#include "hierfed/fed/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "hierfed/errors.hpp"

namespace hierfed::fed {

namespace {

constexpr char kHex[] = "0123456789abcdef";

std::string encode(const nn::Tensor& t) {
    std::string out;
    out.reserve(static_cast<std::size_t>(t.size()) * 16);
    for (Eigen::Index i = 0; i < t.size(); ++i) {
        const auto bits = std::bit_cast<std::uint64_t>(t.data()[i]);
        for (int b = 0; b < 8; ++b) {
            const auto byte = static_cast<unsigned>((bits >> (8 * b)) & 0xffU);
            out.push_back(kHex[byte >> 4]);
            out.push_back(kHex[byte & 0xfU]);
        }
    }
    return out;
}

unsigned nibble(char c) {
    if (c >= '0' && c <= '9') return static_cast<unsigned>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<unsigned>(c - 'a' + 10);
    throw DataError(std::string("checkpoint: bad hex digit '") + c + "'");
}

void decode(const std::string& hex, nn::Tensor& t) {
    if (hex.size() != static_cast<std::size_t>(t.size()) * 16) throw DataError("checkpoint: payload length mismatch");
    for (Eigen::Index i = 0; i < t.size(); ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) {
            const std::size_t at = static_cast<std::size_t>(i) * 16 + static_cast<std::size_t>(b) * 2;
            const std::uint64_t byte = (nibble(hex[at]) << 4) | nibble(hex[at + 1]);
            bits |= byte << (8 * b);
        }
        t.data()[i] = std::bit_cast<double>(bits);
    }
}

std::string key_string(const GroupKey& k) {
    return std::to_string(k.course) + ":" + std::to_string(static_cast<int>(k.variable)) + ":" +
           std::to_string(k.subgroup);
}

GroupKey parse_key(const std::string& s) {
    GroupKey k;
    int v = 0;
    if (std::sscanf(s.c_str(), "%d:%d:%d", &k.course, &v, &k.subgroup) != 3) {
        throw DataError("checkpoint: bad group key '" + s + "'");
    }
    k.variable = static_cast<Demographic>(v);
    return k;
}

}  // namespace

nlohmann::json params_to_json(const nn::ParamSet& p) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& [name, t] : p) {
        layers.push_back({{"name", name}, {"shape", {t.rows(), t.cols()}}, {"f64le", encode(t)}});
    }
    return layers;
}

nn::ParamSet params_from_json(const nlohmann::json& j) {
    nn::ParamSet p;
    try {
        for (const auto& layer : j) {
            const auto rows = layer.at("shape").at(0).get<Eigen::Index>();
            const auto cols = layer.at("shape").at(1).get<Eigen::Index>();
            nn::Tensor t(rows, cols);
            decode(layer.at("f64le").get<std::string>(), t);
            p.add(layer.at("name").get<std::string>(), std::move(t));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint: ") + e.what());
    }
    return p;
}

nlohmann::json bundle_to_json(const TrainedBundle& b, const std::string& config_hash,
                              const nlohmann::json& meta) {
    nlohmann::json j;
    j["format"] = "hierfed-checkpoint";
    j["version"] = kCheckpointVersion;
    j["config_hash"] = config_hash;
    j["meta"] = meta;
    j["global"] = params_to_json(b.global);
    j["course"] = nlohmann::json::object();
    for (const auto& [c, p] : b.course) j["course"][std::to_string(c)] = params_to_json(p);
    j["local"] = nlohmann::json::object();
    for (const auto& [k, p] : b.local) j["local"][key_string(k)] = params_to_json(p);
    j["history"] = nlohmann::json::array();
    for (double h : b.history) j["history"].push_back(encode(nn::Tensor::Constant(1, 1, h)));
    j["aggregations"] = b.aggregations;
    j["local_iterations"] = nlohmann::json::object();
    for (const auto& [k, n] : b.local_iterations) j["local_iterations"][key_string(k)] = n;
    return j;
}

TrainedBundle bundle_from_json(const nlohmann::json& j, std::string* config_hash, nlohmann::json* meta) {
    TrainedBundle b;
    try {
        if (j.at("format") != "hierfed-checkpoint") throw DataError("not a hierfed checkpoint");
        if (j.at("version").get<int>() != kCheckpointVersion) throw DataError("unsupported checkpoint version");
        if (config_hash) *config_hash = j.at("config_hash").get<std::string>();
        if (meta) *meta = j.value("meta", nlohmann::json::object());
        b.global = params_from_json(j.at("global"));
        for (const auto& [c, p] : j.at("course").items()) b.course[std::stoi(c)] = params_from_json(p);
        for (const auto& [k, p] : j.at("local").items()) b.local[parse_key(k)] = params_from_json(p);
        for (const auto& h : j.at("history")) {
            nn::Tensor t(1, 1);
            decode(h.get<std::string>(), t);
            b.history.push_back(t(0, 0));
        }
        b.aggregations = j.at("aggregations").get<int>();
        for (const auto& [k, n] : j.at("local_iterations").items()) b.local_iterations[parse_key(k)] = n.get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint: ") + e.what());
    }
    return b;
}

void save_checkpoint(const std::filesystem::path& path, const TrainedBundle& b,
                     const std::string& config_hash, const nlohmann::json& meta) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write checkpoint " + path.string());
    out << bundle_to_json(b, config_hash, meta).dump() << '\n';
}

TrainedBundle load_checkpoint(const std::filesystem::path& path, std::string* config_hash,
                              nlohmann::json* meta) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read checkpoint " + path.string());
    try {
        return bundle_from_json(nlohmann::json::parse(in), config_hash, meta);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("checkpoint: ") + e.what());
    }
}

}  // namespace hierfed::fed
