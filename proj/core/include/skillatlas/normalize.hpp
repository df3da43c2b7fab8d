#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "skillatlas/aggregate.hpp"

namespace skillatlas {

/// Field-of-study x skill matrix (row-major).
struct FosSkillMatrix {
  std::vector<std::string> fos_list;
  std::vector<std::string> skill_list;
  std::vector<double> values;

  std::size_t n_fos() const noexcept { return fos_list.size(); }
  std::size_t n_skills() const noexcept { return skill_list.size(); }
  double at(std::size_t m, std::size_t s) const { return values[m * skill_list.size() + s]; }
  double& at(std::size_t m, std::size_t s) { return values[m * skill_list.size() + s]; }
  std::span<const double> row(std::size_t m) const { return {values.data() + m * n_skills(), n_skills()}; }
  std::size_t fos_index(std::string_view fos) const;  // throws UnknownFos
};

/// Mean of each field's aggregate records (records without a field label
/// are skipped). Fields are sorted by name.
FosSkillMatrix fos_matrix_from_aggregates(std::span<const AggregateRecord> records, const SkillTaxonomy& taxonomy);

std::string fos_matrix_to_csv(const FosSkillMatrix& m);
FosSkillMatrix fos_matrix_from_csv(const std::filesystem::path& path);

/// rca(m,s) = (v(m,s) / sum_s' v(m,s')) / (sum_m' v(m',s) / sum v).
/// Negative inputs are clamped to 0 first; a skill column with zero total
/// gets rca 0 everywhere. Throws ZeroRowSum naming the field.
FosSkillMatrix rca(const FosSkillMatrix& matrix);

struct MaskOptions {
  std::size_t top_n = 100;
  double threshold = 0.5;  // share of fields whose top_n must contain the skill
};

/// Skills that rank in the top_n (by raw value, ties by skill order) of at
/// least `threshold` of all fields.
std::set<std::string> mask_frequent(const FosSkillMatrix& matrix, const MaskOptions& options = {});

struct RankedSkill {
  std::string skill_id;
  double value = 0.0;
};

/// Highest-valued skills of one field, ties by skill id; masked skills are
/// skipped.
std::vector<RankedSkill> top_k(const FosSkillMatrix& matrix, std::string_view fos, std::size_t k,
                               const std::set<std::string>* mask = nullptr);

struct RegressionResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  double slope_stderr = 0.0;
};

/// Ordinary least squares with a two-sided t-test on the slope.
RegressionResult ols(std::span<const double> x, std::span<const double> y);

struct DistinctivenessResult {
  RegressionResult fit;
  std::vector<std::string> fos;
  std::vector<double> x;  // percentile of each field's RCA row
  std::vector<double> y;  // salary
};

/// x(m) = p-th percentile of row m of `rca_matrix`; regresses salary on x
/// over fields present in both inputs. Throws TooFewPoints below 3 fields.
DistinctivenessResult distinctiveness_regression(const FosSkillMatrix& rca_matrix, double percentile,
                                                 const std::map<std::string, double>& salary);

/// (field_name, median_annual_earnings_usd) CSV.
std::map<std::string, double> load_salary_table(const std::filesystem::path& path);

}  // namespace skillatlas
