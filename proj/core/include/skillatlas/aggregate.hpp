#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "skillatlas/corpus.hpp"
#include "skillatlas/skill_score.hpp"

namespace skillatlas {

/// Mean skill vector of one (institution, field, year) triple.
struct AggregateRecord {
  std::string record_id;
  int year = 0;
  std::string institution_name;
  std::optional<std::string> unit_id;
  std::optional<std::string> city;
  std::optional<std::string> state;
  std::optional<std::string> field_name;
  std::optional<std::string> field_code;
  std::optional<std::string> sector;
  std::size_t n_syllabi = 0;
  std::vector<double> mean_scores;
};

/// Grouping key of a syllabus. unit prefers unit_id and falls back to the
/// normalized institution name; field prefers field_code over field_name.
struct GroupKey {
  std::string unit;
  std::string field;
  int year = 0;
  bool unit_from_name = false;

  auto operator<=>(const GroupKey& o) const { return std::tie(unit, field, year) <=> std::tie(o.unit, o.field, o.year); }
  bool operator==(const GroupKey& o) const { return std::tie(unit, field, year) == std::tie(o.unit, o.field, o.year); }
};

/// Returns the key, or the reason it cannot be formed.
std::optional<GroupKey> group_key(const SyllabusRecord& rec, std::string* reason = nullptr);
std::string make_record_id(const GroupKey& key);
/// Label used for per-field breakdowns: field_name, else field_code.
std::string fos_label(const SyllabusRecord& rec);

struct AggregateException {
  std::string syllabus_id;
  std::string reason;
};

struct AggregateResult {
  std::vector<AggregateRecord> records;  // sorted by (unit, field, year)
  std::vector<AggregateException> exceptions;
  std::vector<std::string> warnings;
};

/// Averages vectors per group. Within a group, values are summed pairwise in
/// syllabus_id order so the result does not depend on input order. Vectors
/// without a usable key or metadata go to `exceptions`.
AggregateResult aggregate(std::span<const SkillVector> vectors, std::span<const SyllabusRecord> corpus);

struct DuplicateCounts {
  std::size_t n_total = 0;
  std::size_t n_duplicates = 0;
  double fraction = 0.0;
};

struct FosDuplicates {
  std::size_t n_syllabi = 0;
  std::size_t total = 0;        // duplicates within (unit, fos)
  std::size_t within_year = 0;  // duplicates within (unit, fos, year)
  std::size_t across_years = 0; // total - within_year
};

struct DedupReport {
  DuplicateCounts unit_fos;
  DuplicateCounts unit_fos_year;
  std::map<std::string, FosDuplicates> per_fos;
  std::size_t n_skipped = 0;  // vectors without a complete group key
};

/// Counts vectors that repeat within a group after rounding every score to
/// `decimals` places: duplicates = group size - distinct vectors.
DedupReport dedup_report(std::span<const SkillVector> vectors, std::span<const SyllabusRecord> corpus,
                         int decimals = 12);

std::string dedup_report_to_json(const DedupReport& report);
std::string dedup_per_fos_csv(const DedupReport& report);

/// institution_fos_year.csv: metadata and n_syllabi per record.
std::string aggregate_metadata_csv(std::span<const AggregateRecord> records);
/// <kind>_scores.csv: record_id then one column per skill id.
std::string aggregate_scores_csv(std::span<const AggregateRecord> records, const SkillTaxonomy& taxonomy);

/// Re-reads the two tables written above; score columns must match the
/// taxonomy ids in order.
std::vector<AggregateRecord> read_aggregates(const std::filesystem::path& metadata_csv,
                                             const std::filesystem::path& scores_csv, const SkillTaxonomy& taxonomy);

}  // namespace skillatlas
