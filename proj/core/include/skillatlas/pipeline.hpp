#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "skillatlas/ability_map.hpp"
#include "skillatlas/embed.hpp"
#include "skillatlas/structure.hpp"

namespace skillatlas {

std::string_view library_version() noexcept;

struct PipelinePaths {
  std::filesystem::path corpus;
  std::filesystem::path learning_phrases;
  std::filesystem::path logistics_phrases;
  std::optional<std::filesystem::path> abbreviations;
  std::filesystem::path dwa_taxonomy;
  std::optional<std::filesystem::path> task_taxonomy;
  std::optional<std::filesystem::path> ability_taxonomy;
  std::filesystem::path occupation_dwa;
  std::filesystem::path ability_importance;
  std::filesystem::path employment;
  std::filesystem::path salary;
  std::filesystem::path output_dir;
};

struct PipelineOptions {
  double max_malformed_fraction = 0.0;
  bool prefix_match = true;
  std::size_t min_tokens = 3;
  int dedup_decimals = 12;
  std::size_t mask_top_n = 100;
  double mask_threshold = 0.5;
  std::size_t top_k = 10;
  std::vector<double> rca_percentiles = {60, 70, 75, 80, 90};
  double kl_epsilon = kDefaultKlEpsilon;
  std::vector<std::string> occupation_filter = {""};
  DistanceMetric elbow_metric = DistanceMetric::Manhattan;
  std::size_t sufficiency_trials = 10;
  std::size_t sufficiency_min_group = 4;
  double community_min_similarity = 0.0;
  bool binary_dwa_profiles = true;
};

struct PipelineConfig {
  PipelinePaths paths;
  ProviderConfig provider;
  std::uint64_t seed = 0;
  PipelineOptions options;
  std::vector<ForestParams> forest_grid = default_grid();
  std::size_t cv_folds = 5;
  unsigned jobs = 1;

  /// Canonical JSON of every setting that can change an output; the output
  /// directory and job count are excluded.
  std::string canonical_json() const;
};

/// Reads a JSON config; relative paths resolve against the file's folder.
/// Throws ConfigError naming the offending field.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir);

/// Applies "section.key=value" overrides (same names as the JSON fields).
void apply_override(PipelineConfig& cfg, std::string_view assignment, const std::filesystem::path& base_dir);

/// Checks that the paths needed by `subcommand` exist.
void validate_config(const PipelineConfig& cfg, std::string_view subcommand);

const std::vector<std::string>& subcommand_names();

struct RunSummary {
  std::vector<std::string> outputs;   // relative to the output directory
  std::vector<std::string> warnings;
};

/// Runs one subcommand (or "all") and writes its outputs plus
/// manifests/<subcommand>.json under the output directory.
RunSummary run_subcommand(std::string_view subcommand, const PipelineConfig& cfg);

}  // namespace skillatlas
