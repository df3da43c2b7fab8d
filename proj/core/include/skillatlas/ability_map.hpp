#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "skillatlas/skill_score.hpp"

namespace skillatlas {

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  std::vector<double> column(std::size_t c) const;
  Matrix select_rows(std::span<const std::size_t> idx) const;
};

// ---- training data ----------------------------------------------------------

/// Occupation -> DWA feature row aligned with a DWA taxonomy.
using DwaProfiles = std::map<std::string, std::vector<double>>;

/// Occupation -> ability importance, with abilities in first-seen order.
struct AbilityTable {
  std::vector<std::string> ability_ids;
  std::map<std::string, std::map<std::string, double>> importance;
};

/// Long-format occupation x DWA file: soc_code, dwa_id[, value]; also reads
/// O*NET "Tasks to DWAs" (O*NET-SOC Code, DWA ID). With `binary`, any listed
/// pair becomes 1; otherwise the value column is used (max over repeats).
DwaProfiles load_occupation_dwa(const std::filesystem::path& path, const SkillTaxonomy& dwa, bool binary = true);

/// soc_code, ability_id, importance[, scale_id]; also O*NET "Abilities"
/// (O*NET-SOC Code, Element ID, Scale ID, Data Value). When a scale column
/// exists only "IM" rows are read.
AbilityTable load_ability_importance(const std::filesystem::path& path);

struct TrainingSet {
  std::vector<std::string> soc_codes;
  std::vector<std::string> ability_ids;
  Matrix X;  // occupations x DWAs
  Matrix Y;  // occupations x abilities, min-max scaled per column
  std::vector<std::string> unmatched_dwa_codes;
  std::vector<std::string> unmatched_ability_codes;
};

/// Inner join on occupation code, then per-ability min-max scaling to
/// [0, 1]; a constant column scales to all zeros. Throws EmptyJoin.
TrainingSet build_training(const DwaProfiles& dwa_profiles, const AbilityTable& abilities);

// ---- trees and forests --------------------------------------------------------

enum class FeatureRule { Sqrt, Third, All };

std::string_view feature_rule_name(FeatureRule r) noexcept;
FeatureRule parse_feature_rule(std::string_view name);
std::size_t features_per_split(FeatureRule rule, std::size_t n_features) noexcept;

struct ForestParams {
  std::size_t n_trees = 100;
  std::size_t max_depth = 0;  // 0 = unlimited
  std::size_t min_samples_leaf = 1;
  FeatureRule features = FeatureRule::Sqrt;
  bool bootstrap = true;

  bool operator==(const ForestParams&) const = default;
};

/// n_trees {100, 300} x max_depth {8, 16, unlimited} x min_samples_leaf
/// {1, 3} x features {sqrt(p), p/3}.
std::vector<ForestParams> default_grid();

/// Flat binary tree; node 0 is the root, feature < 0 marks a leaf.
struct RegressionTree {
  struct Node {
    int feature = -1;
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;
    bool operator==(const Node&) const = default;
  };
  std::vector<Node> nodes;

  /// Goes left when x[feature] <= threshold.
  double predict(std::span<const double> x) const;
  std::size_t depth() const;
  std::size_t leaf_count() const;
  bool operator==(const RegressionTree&) const = default;
};

/// Greedy CART on squared error. Each node draws features_per_split distinct
/// features from `seed`, tries every midpoint between consecutive distinct
/// values, and keeps the split with the lowest child SSE; ties go to the lower
/// feature index, then the lower threshold. `rows` selects (possibly
/// repeated) training rows; empty means all rows.
RegressionTree train_tree(const Matrix& X, std::span<const double> y, const ForestParams& params, std::uint64_t seed,
                          std::span<const std::size_t> rows = {});

struct ForestModel {
  std::string ability_id;
  std::vector<RegressionTree> trees;
  ForestParams params;
  double cv_mse = 0.0;
  double oob_mse = 0.0;  // NaN when no row was ever out of bag
  std::uint64_t master_seed = 0;
  std::size_t n_features = 0;

  double predict(std::span<const double> x) const;
};

/// Bootstrap forest; tree t uses seed derive_seed(master_seed, t), so the
/// model does not depend on `jobs`.
ForestModel train_forest(const Matrix& X, std::span<const double> y, const ForestParams& params,
                         std::uint64_t master_seed, unsigned jobs = 1);

struct CvReport {
  std::vector<double> cell_mse;  // mean over folds, per grid cell
  std::size_t best_cell = 0;
};

/// Seeded k-fold CV over the grid; the best cell (first on ties) is
/// retrained on all rows and its mean CV MSE stored in cv_mse.
ForestModel train_forest_cv(const Matrix& X, std::span<const double> y, std::span<const ForestParams> grid,
                            std::size_t folds, std::uint64_t master_seed, unsigned jobs = 1,
                            CvReport* report = nullptr);

/// Fold assignment: a seeded permutation cut into `folds` contiguous parts.
std::vector<std::vector<std::size_t>> make_folds(std::size_t n, std::size_t folds, std::uint64_t seed);

// ---- model sets ---------------------------------------------------------------

struct AbilityModelSet {
  std::string taxonomy_fingerprint;
  std::size_t n_features = 0;
  std::vector<ForestModel> models;  // one per ability, in ability order
};

struct AbilityTrainingOptions {
  std::vector<ForestParams> grid = default_grid();
  std::size_t folds = 5;
  std::uint64_t master_seed = 0;
  unsigned jobs = 1;
};

/// One forest per ability column of the training set.
AbilityModelSet train_ability_models(const TrainingSet& data, const SkillTaxonomy& dwa,
                                     const AbilityTrainingOptions& options);

std::string models_to_json(const AbilityModelSet& set);
AbilityModelSet models_from_json(std::string_view text);

/// Maps a DWA skill vector to ability scores (kind = ability). An
/// empty_content vector maps to all zeros.
SkillVector predict_abilities(const SkillVector& dwa_vector, const AbilityModelSet& models,
                              const std::string& dwa_fingerprint = {});

}  // namespace skillatlas
