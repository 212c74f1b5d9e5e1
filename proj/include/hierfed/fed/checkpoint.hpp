#pragma once

// JSON checkpoints. Each layer stores its shape and its row-major values as
// little-endian float64 bytes, hex encoded, so a load reproduces the saved
// doubles bit for bit.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "hierfed/fed/engine.hpp"

namespace hierfed::fed {

inline constexpr int kCheckpointVersion = 1;

nlohmann::json params_to_json(const nn::ParamSet& p);
nn::ParamSet params_from_json(const nlohmann::json& j);

/// `meta` is stored verbatim (the runner records fold and repetition there).
nlohmann::json bundle_to_json(const TrainedBundle& b, const std::string& config_hash,
                              const nlohmann::json& meta = nlohmann::json::object());
TrainedBundle bundle_from_json(const nlohmann::json& j, std::string* config_hash = nullptr,
                               nlohmann::json* meta = nullptr);

void save_checkpoint(const std::filesystem::path& path, const TrainedBundle& b,
                     const std::string& config_hash,
                     const nlohmann::json& meta = nlohmann::json::object());
TrainedBundle load_checkpoint(const std::filesystem::path& path, std::string* config_hash = nullptr,
                              nlohmann::json* meta = nullptr);

}  // namespace hierfed::fed
