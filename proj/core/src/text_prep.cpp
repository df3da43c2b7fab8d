#include "skillatlas/text_prep.hpp"

#include <algorithm>

#include "skillatlas/error.hpp"
#include "skillatlas/util.hpp"

namespace skillatlas {

namespace {

bool is_word_byte(char c) noexcept {
  const auto u = static_cast<unsigned char>(c);
  return (u >= '0' && u <= '9') || (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z') || u >= 0x80;
}

bool is_terminator(char c) noexcept { return c == '.' || c == '!' || c == '?'; }

bool is_upper_or_digit(char c) noexcept { return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9'); }

bool is_ascii_alpha(char c) noexcept { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

// Token immediately before position `end` (exclusive), lowercased, with
// leading non-word characters such as '(' removed.
std::string token_before(std::string_view text, std::size_t end) {
  std::size_t b = end;
  while (b > 0 && !is_ascii_space(text[b - 1])) --b;
  std::string_view tok = text.substr(b, end - b);
  while (!tok.empty() && !is_word_byte(tok.front())) tok.remove_prefix(1);
  return to_lower_ascii(tok);
}

}  // namespace

std::vector<Sentence> segment(std::string_view text, std::string_view syllabus_id, const SegmentOptions& options) {
  std::vector<Sentence> out;
  auto emit = [&](std::size_t b, std::size_t e) {
    auto piece = trim(text.substr(b, e - b));
    if (piece.empty()) return;
    Sentence s;
    s.syllabus_id = std::string(syllabus_id);
    s.index = out.size();
    s.text = std::string(piece);
    s.normalized = normalize_text(piece);
    out.push_back(std::move(s));
  };

  const std::size_t n = text.size();
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < n) {
    const char c = text[i];
    if (is_ascii_space(c)) {
      std::size_t k = i;
      int newlines = 0;
      while (k < n && is_ascii_space(text[k])) {
        if (text[k] == '\n') ++newlines;
        ++k;
      }
      if (newlines >= 2) {
        emit(start, i);
        start = k;
      }
      i = k;
      continue;
    }
    if (is_terminator(c)) {
      std::size_t j = i;
      while (j < n && is_terminator(text[j])) ++j;
      bool boundary = false;
      if (j == n) {
        boundary = true;
      } else if (is_ascii_space(text[j])) {
        std::size_t k = j;
        while (k < n && is_ascii_space(text[k])) ++k;
        boundary = k == n || is_upper_or_digit(text[k]);
      }
      if (boundary && c == '.' && j == i + 1) {
        const std::string tok = token_before(text, i);
        if (std::find(options.abbreviations.begin(), options.abbreviations.end(), tok) !=
            options.abbreviations.end()) {
          boundary = false;
        }
      }
      if (boundary) {
        emit(start, j);
        start = j;
      }
      i = j;
      continue;
    }
    ++i;
  }
  emit(start, n);
  return out;
}

std::vector<std::string> load_abbreviation_list(const std::filesystem::path& path) {
  std::vector<std::string> out;
  for (auto& phrase : load_phrase_list(path)) {
    while (!phrase.empty() && phrase.back() == '.') phrase.pop_back();
    if (!phrase.empty()) out.push_back(std::move(phrase));
  }
  return out;
}

std::vector<std::string_view> tokenize(std::string_view normalized) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  const std::size_t n = normalized.size();
  while (i < n) {
    while (i < n && !is_word_byte(normalized[i])) ++i;
    std::size_t b = i;
    while (i < n && is_word_byte(normalized[i])) ++i;
    if (i > b) out.push_back(normalized.substr(b, i - b));
  }
  return out;
}

namespace {

bool token_matches(std::string_view sentence_tok, std::string_view phrase_tok, bool prefix_match) {
  if (sentence_tok == phrase_tok) return true;
  if (!prefix_match || sentence_tok.size() <= phrase_tok.size()) return false;
  if (sentence_tok.substr(0, phrase_tok.size()) != phrase_tok) return false;
  const auto rest = sentence_tok.substr(phrase_tok.size());
  return std::all_of(rest.begin(), rest.end(), is_ascii_alpha);
}

}  // namespace

bool tokens_contain(std::span<const std::string_view> sentence, std::span<const std::string> phrase,
                    bool prefix_match) {
  if (phrase.empty() || phrase.size() > sentence.size()) return false;
  for (std::size_t start = 0; start + phrase.size() <= sentence.size(); ++start) {
    bool ok = true;
    for (std::size_t k = 0; k < phrase.size() && ok; ++k) {
      ok = token_matches(sentence[start + k], phrase[k], prefix_match);
    }
    if (ok) return true;
  }
  return false;
}

bool phrase_match(std::string_view sentence_normalized, std::string_view phrase, bool prefix_match) {
  const auto stoks = tokenize(sentence_normalized);
  std::vector<std::string> ptoks;
  for (auto t : tokenize(phrase)) ptoks.emplace_back(t);
  return tokens_contain(stoks, ptoks, prefix_match);
}

PhraseMatcher::PhraseMatcher(const PhraseList& phrases, bool prefix_match) : prefix_match_(prefix_match) {
  for (const auto& p : phrases) {
    const std::string lowered = to_lower_ascii(p);
    std::vector<std::string> toks;
    for (auto t : tokenize(lowered)) toks.emplace_back(t);
    if (!toks.empty()) phrases_.push_back(std::move(toks));
  }
}

bool PhraseMatcher::matches_any(std::span<const std::string_view> sentence_tokens) const {
  return std::any_of(phrases_.begin(), phrases_.end(),
                     [&](const auto& p) { return tokens_contain(sentence_tokens, p, prefix_match_); });
}

FilterReport& FilterReport::operator+=(const FilterReport& o) {
  n_input += o.n_input;
  n_removed_logistics += o.n_removed_logistics;
  n_removed_no_learning += o.n_removed_no_learning;
  n_kept += o.n_kept;
  finalize();
  return *this;
}

void FilterReport::finalize() noexcept {
  removal_fraction =
      n_input == 0 ? 0.0 : 1.0 - static_cast<double>(n_kept) / static_cast<double>(n_input);
}

bool FilterReport::consistent() const noexcept {
  if (n_input != n_removed_logistics + n_removed_no_learning + n_kept) return false;
  const double expected = n_input == 0 ? 0.0 : 1.0 - static_cast<double>(n_kept) / static_cast<double>(n_input);
  return removal_fraction == expected && removal_fraction >= 0.0 && removal_fraction <= 1.0;
}

LearningFilter::LearningFilter(const PhraseList& logistics, const PhraseList& learning, const FilterOptions& options)
    : logistics_(logistics, options.prefix_match), learning_(learning, options.prefix_match), options_(options) {
  if (learning_.empty()) throw Error(Errc::EmptyLearningList, "learning phrase list is empty");
}

FilterResult LearningFilter::apply(std::span<const Sentence> sentences) const {
  FilterResult res;
  for (const auto& s : sentences) {
    ++res.report.n_input;
    const std::string lowered = to_lower_ascii(s.normalized.empty() ? normalize_text(s.text) : s.normalized);
    const auto toks = tokenize(lowered);
    if (logistics_.matches_any(toks)) {
      ++res.report.n_removed_logistics;
    } else if (toks.size() < options_.min_tokens || !learning_.matches_any(toks)) {
      ++res.report.n_removed_no_learning;
    } else {
      ++res.report.n_kept;
      res.kept.push_back(s);
    }
  }
  res.report.finalize();
  return res;
}

FilterResult filter_learning(std::span<const Sentence> sentences, const PhraseList& logistics,
                             const PhraseList& learning, const FilterOptions& options) {
  return LearningFilter(logistics, learning, options).apply(sentences);
}

}  // namespace skillatlas
