#pragma once

#include <filesystem>

#include <nlohmann/json_fwd.hpp>

#include "compsnn/model.hpp"

namespace compsnn {

/// Every double is stored as its shortest round-trip decimal string, so a
/// save/load cycle reproduces the parameters bit for bit.
nlohmann::json checkpoint_to_json(const ModelParams& model);
ModelParams checkpoint_from_json(const nlohmann::json& doc);

void save_checkpoint(const ModelParams& model, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

nlohmann::json config_to_json(const CompSnnConfig& config);
CompSnnConfig config_from_json(const nlohmann::json& doc);

}  // namespace compsnn
