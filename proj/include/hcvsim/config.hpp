#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "hcvsim/engine.hpp"

namespace hcvsim {

/// Flat JSON object whose keys mirror SimConfig field names (model symbols such as m_i or q_shar for environment parameters).
nlohmann::json config_to_json(const SimConfig& c);
/// Applies every key of `j` to `c`; unknown keys are rejected.
void apply_json(SimConfig& c, const nlohmann::json& j);
/// Applies `key=value` overrides; values are parsed as JSON, falling back to plain strings.
void apply_overrides(SimConfig& c, const std::vector<std::string>& assignments);

SimConfig load_config(const std::filesystem::path& path);
void save_config(const SimConfig& c, const std::filesystem::path& path);

}  // namespace hcvsim
