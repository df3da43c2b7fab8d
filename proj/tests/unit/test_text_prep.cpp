#include <gtest/gtest.h>

#include <random>

#include "skillatlas/corpus.hpp"
#include "skillatlas/text_prep.hpp"
#include "skillatlas/util.hpp"

using namespace skillatlas;

namespace {

std::vector<std::string> texts(const std::vector<Sentence>& s) {
  std::vector<std::string> out;
  for (const auto& x : s) out.push_back(x.text);
  return out;
}

std::vector<Sentence> sentences(const std::vector<std::string>& raw) {
  std::vector<Sentence> out;
  for (std::size_t i = 0; i < raw.size(); ++i) out.push_back({"s", i, raw[i], normalize_text(raw[i])});
  return out;
}

std::string strip_space(std::string_view s) {
  std::string out;
  for (char c : s)
    if (!is_ascii_space(c)) out.push_back(c);
  return out;
}

// Independent token-boundary check: the phrase tokens appear as a contiguous
// run of sentence tokens, each either equal or (prefix mode) extended by letters.
bool oracle_contains(const std::string& sentence, const std::string& phrase, bool prefix) {
  auto toks = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : s) {
      if (std::isalnum(c) || c >= 0x80) {
        cur.push_back(static_cast<char>(std::tolower(c)));
      } else if (!cur.empty()) {
        out.push_back(cur);
        cur.clear();
      }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
  };
  const auto st = toks(sentence);
  const auto pt = toks(phrase);
  if (pt.empty() || pt.size() > st.size()) return false;
  for (std::size_t i = 0; i + pt.size() <= st.size(); ++i) {
    bool ok = true;
    for (std::size_t j = 0; j < pt.size() && ok; ++j) {
      const auto& a = st[i + j];
      const auto& b = pt[j];
      if (a == b) continue;
      if (!prefix || a.size() <= b.size() || a.compare(0, b.size(), b) != 0) {
        ok = false;
        continue;
      }
      for (std::size_t k = b.size(); k < a.size(); ++k)
        if (!std::isalpha(static_cast<unsigned char>(a[k]))) ok = false;
    }
    if (ok) return true;
  }
  return false;
}

}  // namespace

TEST(Segment, Empty) { EXPECT_TRUE(segment("").empty()); }

TEST(Segment, TwoSentences) {
  EXPECT_EQ(texts(segment("Analyze networks. Office hours: Tue 2pm.")),
            (std::vector<std::string>{"Analyze networks.", "Office hours: Tue 2pm."}));
}

TEST(Segment, AbbreviationSuppressesBoundary) {
  EXPECT_EQ(texts(segment("See e.g. Smith. Then apply.")),
            (std::vector<std::string>{"See e.g. Smith.", "Then apply."}));
}

TEST(Segment, LowercaseContinuationAndBlankLines) {
  EXPECT_EQ(texts(segment("Version 2.0 is out. and more")),
            (std::vector<std::string>{"Version 2.0 is out. and more"}));
  EXPECT_EQ(texts(segment("Heading without period\n\nBody text here")),
            (std::vector<std::string>{"Heading without period", "Body text here"}));
  EXPECT_EQ(texts(segment("Really? Yes! 3 left.")), (std::vector<std::string>{"Really?", "Yes!", "3 left."}));
}

TEST(Segment, IndicesAndIds) {
  const auto s = segment("One here. Two here. Three here.", "syl-1");
  ASSERT_EQ(s.size(), 3u);
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(s[i].index, i);
    EXPECT_EQ(s[i].syllabus_id, "syl-1");
    EXPECT_EQ(s[i].normalized, normalize_text(s[i].text));
  }
}

TEST(Segment, CoversNonWhitespaceInputOnRandomText) {
  std::mt19937_64 rng(5);
  const std::string alphabet = "abcXYZ09 .!?\n\t\xc3\xa9,:;";
  for (int trial = 0; trial < 500; ++trial) {
    std::string text;
    const std::size_t len = rng() % 200;
    for (std::size_t i = 0; i < len; ++i) text.push_back(alphabet[rng() % alphabet.size()]);
    const auto a = segment(text);
    EXPECT_EQ(a, segment(text));
    std::string joined;
    for (const auto& s : a) {
      EXPECT_FALSE(trim(s.text).empty());
      joined += s.text;
    }
    EXPECT_EQ(strip_space(joined), strip_space(text)) << text;
  }
}

TEST(PhraseMatch, Examples) {
  EXPECT_TRUE(phrase_match("office hours: tue", "office hours"));
  EXPECT_FALSE(phrase_match("professors analyze", "rofessor"));
  EXPECT_TRUE(phrase_match("analyze, then compare", "analyze"));
}

TEST(PhraseMatch, PrefixMode) {
  EXPECT_TRUE(phrase_match("students analyzing data", "analyz", true));
  EXPECT_TRUE(phrase_match("we analyzed it", "analyze", true));
  EXPECT_FALSE(phrase_match("we analyzed it", "analyze", false));
  EXPECT_FALSE(phrase_match("see analyze2", "analyze", true));
  EXPECT_FALSE(phrase_match("office", "office hours"));
}

TEST(PhraseMatch, AgreesWithOracle) {
  std::mt19937_64 rng(9);
  const std::vector<std::string> words = {"a", "an", "ab", "abc", "b", "ba", "bab", "c1", "ca"};
  for (int trial = 0; trial < 3000; ++trial) {
    std::string s, p;
    for (std::size_t i = 0, n = 1 + rng() % 6; i < n; ++i) s += (i ? (rng() % 2 ? " " : ", ") : "") + words[rng() % words.size()];
    for (std::size_t i = 0, n = 1 + rng() % 2; i < n; ++i) p += (i ? " " : "") + words[rng() % words.size()];
    for (bool prefix : {false, true}) EXPECT_EQ(phrase_match(s, p, prefix), oracle_contains(s, p, prefix)) << s << " | " << p;
  }
}

TEST(Filter, Example) {
  const auto r = filter_learning(sentences({"We analyze graphs.", "Office hours: Tue."}), {"office hours"}, {"analyze"});
  EXPECT_EQ(texts(r.kept), (std::vector<std::string>{"We analyze graphs."}));
  EXPECT_EQ(r.report.n_input, 2u);
  EXPECT_EQ(r.report.n_removed_logistics, 1u);
  EXPECT_EQ(r.report.n_removed_no_learning, 0u);
  EXPECT_EQ(r.report.n_kept, 1u);
  EXPECT_DOUBLE_EQ(r.report.removal_fraction, 0.5);
}

TEST(Filter, Empty) {
  const auto r = filter_learning({}, {"x"}, {"y"});
  EXPECT_TRUE(r.kept.empty());
  EXPECT_EQ(r.report.n_input, 0u);
  EXPECT_EQ(r.report.removal_fraction, 0.0);
  EXPECT_TRUE(r.report.consistent());
}

TEST(Filter, LogisticsWinsOverLearning) {
  const auto r = filter_learning(sentences({"Plagiarism will not help you analyze anything."}), {"plagiarism"},
                                 {"analyze"});
  EXPECT_TRUE(r.kept.empty());
  EXPECT_EQ(r.report.n_removed_logistics, 1u);
}

TEST(Filter, ShortFragmentsDropped) {
  const auto r = filter_learning(sentences({"Analyze.", "Analyze this now."}), {"zzz"}, {"analyze"});
  EXPECT_EQ(texts(r.kept), (std::vector<std::string>{"Analyze this now."}));
  EXPECT_EQ(r.kept[0].index, 1u);
  EXPECT_EQ(r.report.n_removed_no_learning, 1u);
}

TEST(Filter, SoundOnRandomSentences) {
  const PhraseList logistics = {"office hours", "late", "grading policy"};
  const PhraseList learning = {"analyze", "design experiments", "evaluate"};
  const std::vector<std::string> filler = {"the", "students", "will", "data", "office", "hours", "policy",
                                           "grading", "latex", "analyzes", "design", "experiments", "evaluated"};
  std::mt19937_64 rng(17);
  std::vector<std::string> raw;
  for (int i = 0; i < 2000; ++i) {
    std::string s;
    for (std::size_t w = 0, n = 1 + rng() % 8; w < n; ++w) s += filler[rng() % filler.size()] + " ";
    if (rng() % 3 == 0) s += learning[rng() % learning.size()] + " ";
    if (rng() % 5 == 0) s += logistics[rng() % logistics.size()];
    raw.push_back(s);
  }
  const auto r = filter_learning(sentences(raw), logistics, learning);
  EXPECT_TRUE(r.report.consistent());
  EXPECT_EQ(r.report.n_input, r.report.n_removed_logistics + r.report.n_removed_no_learning + r.report.n_kept);
  EXPECT_GT(r.report.n_kept, 0u);
  for (const auto& s : r.kept) {
    for (const auto& p : logistics) EXPECT_FALSE(oracle_contains(s.normalized, p, true)) << s.text;
    bool any = false;
    for (const auto& p : learning) any = any || oracle_contains(s.normalized, p, true);
    EXPECT_TRUE(any) << s.text;
  }
}

TEST(FilterReport, Accumulates) {
  FilterReport a{4, 1, 1, 2, 0};
  a.finalize();
  FilterReport b{6, 0, 3, 3, 0};
  b.finalize();
  a += b;
  a.finalize();
  EXPECT_EQ(a.n_input, 10u);
  EXPECT_EQ(a.n_kept, 5u);
  EXPECT_DOUBLE_EQ(a.removal_fraction, 0.5);
  EXPECT_TRUE(a.consistent());
}
