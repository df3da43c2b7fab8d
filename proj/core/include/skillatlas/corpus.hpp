#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "skillatlas/csv.hpp"

namespace skillatlas {

/// One syllabus and its institutional metadata. Absent metadata is
/// represented as std::nullopt, never as an empty string.
struct SyllabusRecord {
  std::string syllabus_id;
  std::string text;
  std::optional<int> year;
  std::string institution_name;
  std::optional<std::string> unit_id;
  std::optional<std::string> city;
  std::optional<std::string> state;
  std::optional<std::string> field_name;
  std::optional<std::string> field_code;
  std::optional<std::string> sector;

  bool operator==(const SyllabusRecord&) const = default;
};

/// Nine CCIHE control x level sectors plus "Not Classified".
std::span<const std::string_view> known_sectors() noexcept;

/// True when every '/'-separated token is a 2-, 4- or 6-digit CIP code
/// ("01", "01.01", "01.0103").
bool is_valid_cip_code(std::string_view code) noexcept;

enum class CorpusFormat { Jsonl, Csv };

struct MalformedRow {
  std::size_t line_no = 0;
  std::string reason;
};

struct LoadReport {
  std::size_t n_rows = 0;  // data rows seen, well-formed or not
  std::vector<MalformedRow> errors;

  double malformed_fraction() const noexcept {
    return n_rows == 0 ? 0.0 : static_cast<double>(errors.size()) / static_cast<double>(n_rows);
  }
};

struct LoadOptions {
  /// The load fails when errors / n_rows exceeds this.
  double max_malformed_fraction = 0.0;
};

/// Streaming reader. Yields records in file order; malformed rows are
/// collected into report() instead of being yielded.
class CorpusReader {
 public:
  CorpusReader(const std::filesystem::path& path, CorpusFormat format);

  std::optional<SyllabusRecord> next();
  const LoadReport& report() const noexcept { return report_; }

 private:
  std::optional<SyllabusRecord> next_jsonl();
  std::optional<SyllabusRecord> next_csv();
  bool accept(SyllabusRecord& rec, std::size_t line_no);

  CorpusFormat format_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
  csv::Table csv_;
  std::size_t csv_pos_ = 0;
  std::map<std::string, std::size_t, std::less<>> seen_ids_;
  LoadReport report_;
};

struct LoadedCorpus {
  std::vector<SyllabusRecord> records;
  LoadReport report;
};

/// Reads the whole corpus. Throws Error(TooManyMalformedRows) when the
/// malformed fraction exceeds the configured limit.
LoadedCorpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                         const LoadOptions& options = {});

CorpusFormat corpus_format_from_path(const std::filesystem::path& path);

/// Validates a record against the SyllabusRecord invariants; returns the
/// reason when it is malformed.
std::optional<std::string> validate_record(const SyllabusRecord& rec);

std::string record_to_json(const SyllabusRecord& rec);

inline constexpr std::string_view kMissingBucket = "(missing)";

struct CountSummary {
  double mean = 0.0;
  double median = 0.0;
  double p25 = 0.0;
  double p75 = 0.0;
};

struct CorpusStats {
  std::size_t n_syllabi = 0;
  std::map<std::string, std::size_t> per_fos;
  std::map<std::string, std::size_t> per_year;
  std::map<std::string, std::size_t> per_state;
  std::map<std::string, std::size_t> per_sector;
  std::optional<CountSummary> sentence_count_summary;

  bool operator==(const CorpusStats& o) const;
};

CorpusStats corpus_stats(std::span<const SyllabusRecord> corpus);
CountSummary summarize_counts(std::span<const std::size_t> counts);
std::string stats_to_json(const CorpusStats& stats);

/// Ordered, deduplicated, lowercased, whitespace-collapsed phrases.
using PhraseList = std::vector<std::string>;

PhraseList parse_phrase_list(std::string_view text);
PhraseList load_phrase_list(const std::filesystem::path& path);
std::string serialize_phrase_list(const PhraseList& list);

}  // namespace skillatlas
