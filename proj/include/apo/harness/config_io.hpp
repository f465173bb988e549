#pragma once

#include <filesystem>
#include <optional>

#include <nlohmann/json.hpp>

#include "apo/env/wrappers.hpp"
#include "apo/ppo/config.hpp"

namespace apo::harness {

nlohmann::json to_json(const ppo::TrainConfig& cfg);
// Overlays the keys present in `j` onto `cfg`; unknown keys are an error.
void apply_json(ppo::TrainConfig& cfg, const nlohmann::json& j);

nlohmann::json to_json(const std::optional<env::NoisyWrapConfig>& noisy);
std::optional<env::NoisyWrapConfig> noisy_from_json(const nlohmann::json& j);

nlohmann::json load_json_file(const std::filesystem::path& path);

}  // namespace apo::harness
