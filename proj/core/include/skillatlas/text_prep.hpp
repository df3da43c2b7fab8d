#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "skillatlas/corpus.hpp"

namespace skillatlas {

struct Sentence {
  std::string syllabus_id;
  std::size_t index = 0;
  std::string text;
  std::string normalized;

  bool operator==(const Sentence&) const = default;
};

struct SegmentOptions {
  /// Lowercase tokens (without the trailing period) that never end a sentence.
  std::vector<std::string> abbreviations = {"e.g", "i.e", "dr", "prof", "vs", "etc", "fig", "no"};
};

/// Rule-based sentence splitter.
///
/// A sentence ends at '.', '!' or '?' when followed by whitespace and then an
/// uppercase letter or digit, or by end of text; a period is not a boundary
/// when the token before it is a listed abbreviation. A blank line (two or
/// more consecutive line breaks) always ends a sentence. Segments are trimmed
/// and empty ones dropped.
std::vector<Sentence> segment(std::string_view text, std::string_view syllabus_id = {},
                              const SegmentOptions& options = {});

std::vector<std::string> load_abbreviation_list(const std::filesystem::path& path);

/// Maximal runs of alphanumeric characters. Bytes >= 0x80 count as word
/// characters so UTF-8 letters stay inside tokens.
std::vector<std::string_view> tokenize(std::string_view normalized);

/// Token-boundary phrase test. Both arguments are expected lowercase. With
/// `prefix_match`, a sentence token also matches a phrase token it starts
/// with when the remainder is letters only ("analyze" ~ "analyzing").
bool phrase_match(std::string_view sentence_normalized, std::string_view phrase, bool prefix_match = true);

/// Pre-tokenized phrase list for repeated matching.
class PhraseMatcher {
 public:
  PhraseMatcher(const PhraseList& phrases, bool prefix_match);

  bool matches_any(std::span<const std::string_view> sentence_tokens) const;
  bool empty() const noexcept { return phrases_.empty(); }

 private:
  std::vector<std::vector<std::string>> phrases_;
  bool prefix_match_;
};

bool tokens_contain(std::span<const std::string_view> sentence, std::span<const std::string> phrase,
                    bool prefix_match);

struct FilterReport {
  std::size_t n_input = 0;
  std::size_t n_removed_logistics = 0;
  std::size_t n_removed_no_learning = 0;
  std::size_t n_kept = 0;
  double removal_fraction = 0.0;

  FilterReport& operator+=(const FilterReport& o);
  void finalize() noexcept;
  bool consistent() const noexcept;
};

struct FilterOptions {
  bool prefix_match = true;
  /// Sentences with fewer tokens are dropped as degenerate fragments.
  std::size_t min_tokens = 3;
};

struct FilterResult {
  std::vector<Sentence> kept;
  FilterReport report;
};

/// Removes a sentence if it matches any logistics phrase (checked first), or
/// is shorter than min_tokens, or matches no learning phrase. Kept sentences
/// keep their order and original indices.
FilterResult filter_learning(std::span<const Sentence> sentences, const PhraseList& logistics,
                             const PhraseList& learning, const FilterOptions& options = {});

class LearningFilter {
 public:
  LearningFilter(const PhraseList& logistics, const PhraseList& learning, const FilterOptions& options = {});
  FilterResult apply(std::span<const Sentence> sentences) const;

 private:
  PhraseMatcher logistics_;
  PhraseMatcher learning_;
  FilterOptions options_;
};

}  // namespace skillatlas
