#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tabscm/common.hpp"
#include "tabscm/csv.hpp"
#include "tabscm/discovery.hpp"
#include "tabscm/metrics.hpp"
#include "tabscm/preprocess.hpp"
#include "tabscm/scm.hpp"

namespace tabscm::cli {

/// Invalid configuration; the message lists every problem found, one per line.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Full configuration with every default filled in.
nlohmann::json default_config();

/// Applies "a.b.c=value". The value is parsed as JSON when possible and
/// kept as a string otherwise.
void apply_override(nlohmann::json& config, const std::string& assignment);

/// Hash of the canonical (default-filled, unresolved) configuration.
std::string config_hash(const nlohmann::json& config);

struct RunConfig {
  nlohmann::json canonical;
  std::string hash;
  /// Relative paths inside a config file are resolved against its directory.
  std::filesystem::path base_dir;

  std::filesystem::path train;
  std::filesystem::path test;
  std::filesystem::path schema;
  SplitFractions split_fractions;
  CsvOptions csv;
  DiscoveryConfig discovery;
  ScmFitConfig fit;
  std::size_t sample_n = 5000;
  std::uint64_t sample_seed = 0;
  std::optional<std::string> upsample_label;
  std::map<std::string, std::size_t> upsample_counts;
  UpsampleMode upsample_mode = UpsampleMode::Auto;
  EvaluationConfig evaluation;
  std::filesystem::path rules;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;

  std::filesystem::path output(const std::string& name) const { return output_dir / name; }
};

/// Merges `user` over the defaults and validates it. Throws ConfigError
/// listing all problems. `base_dir` resolves relative paths.
RunConfig resolve_config(const nlohmann::json& user, const std::filesystem::path& base_dir);

/// Entry point of the `tabscm` executable. Returns the process exit code.
int main(int argc, char** argv);

}  // namespace tabscm::cli
