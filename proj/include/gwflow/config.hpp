#pragma once

// Declarative experiment configs (JSON, schema "gwflow/1") and the artifacts
// a run leaves on disk.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gwflow/convergence_lab.hpp"

namespace gwflow {

inline constexpr std::string_view kConfigSchema = "gwflow/1";

enum ExitCode : int { kExitPass = 0, kExitVerdictFailed = 1, kExitSchema = 2, kExitValidity = 3, kExitRuntime = 4 };

struct BundledConfig {
    std::string name;
    std::string anchor;
    nlohmann::json document;
};

/// Configs compiled into the library from configs/*.json, sorted by name.
[[nodiscard]] const std::vector<BundledConfig>& bundled_configs();
/// ConfigError for unknown names.
[[nodiscard]] const BundledConfig& bundled_config(std::string_view name);

/// Parses a file; ConfigError on I/O or JSON syntax errors.
[[nodiscard]] nlohmann::json load_config(const std::filesystem::path& path);

/// Applies "dotted.path=value"; value is parsed as JSON, falling back to a string.
void apply_override(nlohmann::json& config, std::string_view assignment);

/// Checks the schema field and the fields every experiment needs.
void validate_config(const nlohmann::json& config);

/// Runs the experiment the config describes. `workers` overrides the config's
/// worker count when nonzero; it never changes results.
[[nodiscard]] ExperimentResult run_config(const nlohmann::json& config, unsigned workers = 0);

/// results.csv and summary.json under `dir` (created if needed).
void write_artifacts(const std::filesystem::path& dir, const nlohmann::json& config, const ExperimentResult& result);

[[nodiscard]] nlohmann::json summary_json(const nlohmann::json& config, const ExperimentResult& result);

/// Maps an in-flight exception to the CLI exit status.
[[nodiscard]] int exit_code_for(const std::exception& e) noexcept;

}  // namespace gwflow
