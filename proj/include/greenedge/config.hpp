#pragma once

#include "greenedge/simulator.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace greenedge {

/// Full document with every key present; the format read by
/// configFromJson and written next to each run.
nlohmann::json toJson(const ExperimentConfig& aConfig);

/// Keys missing from aDoc keep their defaults. Unknown keys and values of
/// the wrong type throw ValidationError listing the valid keys.
ExperimentConfig configFromJson(const nlohmann::json& aDoc);

ExperimentConfig loadConfig(const std::filesystem::path& aPath);
void             saveConfig(const std::filesystem::path& aPath,
                            const ExperimentConfig&      aConfig);

/// Applies "dotted.key=value" assignments in order. The value is read as
/// JSON when it parses, otherwise as a plain string.
ExperimentConfig applyOverrides(const ExperimentConfig&         aConfig,
                                const std::vector<std::string>& aOverrides);

// Every dotted leaf key accepted by configFromJson and applyOverrides.
std::vector<std::string> configKeys();

} // namespace greenedge
