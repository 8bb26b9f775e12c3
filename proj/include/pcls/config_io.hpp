#pragma once

// JSON form of RunConfig and ReconReport. The schema is documented in
// docs/config.md; every key has a default, and unknown keys are rejected.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "pcls/run_config.hpp"

namespace pcls {

using Json = nlohmann::ordered_json;

/// Bad configuration: unknown key, wrong type, or out-of-range value.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Json config_to_json(const RunConfig& cfg);
/// Missing keys keep their defaults. Throws ConfigError naming the offending key.
RunConfig config_from_json(const Json& doc);

RunConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const RunConfig& cfg);

/// Applies "key=value" to a config document. `key` is a dotted path such as
/// pcls.sigma or phantom.shapes.0.radius, or a bare leaf name when that name
/// occurs exactly once (sigma). The value is read as JSON, falling back to a
/// plain string.
void apply_override(Json& doc, const std::string& assignment);

/// Loads `path` (or the defaults when empty), applies the overrides in order
/// and validates the result.
RunConfig resolve_config(const std::filesystem::path& path, const std::vector<std::string>& overrides);

Json record_to_json(const IterationRecord& rec);
Json report_to_json(const ReconReport& report, const RunConfig& cfg);
void write_report(const std::filesystem::path& path, const ReconReport& report, const RunConfig& cfg);

}  // namespace pcls
