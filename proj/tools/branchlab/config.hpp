#pragma once

// Experiment configuration: JSON parsing, validation and field construction.

#include "branchlab/field.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <set>
#include <stdexcept>
#include <string>

namespace branchlab::cli {

inline constexpr int kSchemaVersion = 1;

/// Validation failure; `key` is a JSON pointer to the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what) : std::runtime_error(what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

enum class ExperimentKind { frequency, monotonicity, minimize, decay, spectral, corollaries, full_pipeline };

std::string to_string(ExperimentKind kind);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::frequency;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
  std::filesystem::path base_dir;  // relative paths resolve against this
  nlohmann::json field;
  nlohmann::json params;           // kind-specific, defaults filled by the runner
  std::set<std::string> expect_fail;
  nlohmann::json raw;
};

/// Parses and validates; the field spec is built once to check it.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir);

/// Builds the field described by `spec`; `seed` drives random families.
FieldPtr make_field(const nlohmann::json& spec, std::uint64_t seed, const std::filesystem::path& base_dir,
                    const std::string& where = "/field");

/// Reads params[key] with a default, checking the JSON type.
double param_double(const nlohmann::json& params, const std::string& key, double fallback);
int param_int(const nlohmann::json& params, const std::string& key, int fallback);
bool param_bool(const nlohmann::json& params, const std::string& key, bool fallback);
std::vector<double> param_doubles(const nlohmann::json& params, const std::string& key,
                                  const std::vector<double>& fallback);

}  // namespace branchlab::cli
