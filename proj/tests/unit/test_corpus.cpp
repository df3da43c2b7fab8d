#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "skillatlas/corpus.hpp"
#include "skillatlas/error.hpp"
#include "test_support.hpp"

using namespace skillatlas;
using skillatlas::testing::TempDir;

namespace {

SyllabusRecord rec(std::string id, std::optional<std::string> field, std::optional<std::string> state = "CA") {
  SyllabusRecord r;
  r.syllabus_id = std::move(id);
  r.text = "Analyze data.";
  r.institution_name = "Inst";
  r.field_name = std::move(field);
  r.state = std::move(state);
  r.year = 2015;
  return r;
}

}  // namespace

TEST(LoadCorpus, ThreeRowsInOrder) {
  TempDir dir;
  const auto p = dir.write("c.jsonl",
                           R"({"syllabus_id":"a","text":"one","year":2010,"institution_name":"X"}
{"syllabus_id":"b","text":"two","institution_name":"X","state":null}
{"syllabus_id":"c","text":"three","institution_name":"Y","field_code":"26.0101"}
)");
  const auto c = load_corpus(p, CorpusFormat::Jsonl);
  ASSERT_EQ(c.records.size(), 3u);
  EXPECT_EQ(c.records[0].syllabus_id, "a");
  EXPECT_EQ(c.records[2].syllabus_id, "c");
  EXPECT_EQ(c.records[0].year, 2010);
  EXPECT_FALSE(c.records[1].year.has_value());
  EXPECT_FALSE(c.records[1].state.has_value());
  EXPECT_EQ(c.report.errors.size(), 0u);
}

TEST(LoadCorpus, EmptyFile) {
  TempDir dir;
  const auto c = load_corpus(dir.write("e.jsonl", ""), CorpusFormat::Jsonl);
  EXPECT_TRUE(c.records.empty());
  EXPECT_EQ(c.report.errors.size(), 0u);
  EXPECT_EQ(c.report.n_rows, 0u);
}

TEST(LoadCorpus, MissingIdIsMalformed) {
  TempDir dir;
  const auto p = dir.write("m.jsonl",
                           R"({"syllabus_id":"a","text":"one"}
{"text":"two"}
{"syllabus_id":"c","text":"three"}
{"syllabus_id":"d","text":"four"}
)");
  EXPECT_THROW(load_corpus(p, CorpusFormat::Jsonl), Error);
  const auto c = load_corpus(p, CorpusFormat::Jsonl, LoadOptions{0.25});
  EXPECT_EQ(c.records.size(), 3u);
  ASSERT_EQ(c.report.errors.size(), 1u);
  EXPECT_EQ(c.report.errors[0].line_no, 2u);
}

TEST(LoadCorpus, ValidationRules) {
  TempDir dir;
  const auto p = dir.write("v.jsonl",
                           R"({"syllabus_id":"a","text":"   "}
{"syllabus_id":"b","text":"x","year":1800}
{"syllabus_id":"c","text":"x","field_code":"26.01a"}
{"syllabus_id":"d","text":"x","field_code":"26.0101/11"}
{"syllabus_id":"d","text":"dup"}
not json
)");
  const auto c = load_corpus(p, CorpusFormat::Jsonl, LoadOptions{1.0});
  ASSERT_EQ(c.records.size(), 1u);
  EXPECT_EQ(c.records[0].syllabus_id, "d");
  EXPECT_EQ(c.report.errors.size(), 5u);
  EXPECT_EQ(c.report.n_rows, 6u);
}

TEST(LoadCorpus, CsvConvenienceFormat) {
  TempDir dir;
  const auto p = dir.write("c.csv",
                           "syllabus_id,text,year,institution_name,state\n"
                           "a,\"Analyze graphs. Then, compare.\",2012,X,\n"
                           "b,text,,Y,NY\n");
  const auto c = load_corpus(p, corpus_format_from_path(p));
  ASSERT_EQ(c.records.size(), 2u);
  EXPECT_EQ(c.records[0].text, "Analyze graphs. Then, compare.");
  EXPECT_FALSE(c.records[0].state.has_value());
  EXPECT_FALSE(c.records[1].year.has_value());
}

TEST(LoadCorpus, JsonRoundTrip) {
  TempDir dir;
  auto r = rec("x", "Biology");
  r.unit_id = "110635";
  r.field_code = "26.0101";
  const auto p = dir.write("r.jsonl", record_to_json(r) + "\n");
  const auto c = load_corpus(p, CorpusFormat::Jsonl);
  ASSERT_EQ(c.records.size(), 1u);
  EXPECT_EQ(c.records[0], r);
}

TEST(CipCode, Shapes) {
  EXPECT_TRUE(is_valid_cip_code("01"));
  EXPECT_TRUE(is_valid_cip_code("01.01"));
  EXPECT_TRUE(is_valid_cip_code("01.0103"));
  EXPECT_TRUE(is_valid_cip_code("26.0101/40.0501"));
  EXPECT_FALSE(is_valid_cip_code("1"));
  EXPECT_FALSE(is_valid_cip_code("01.010"));
  EXPECT_FALSE(is_valid_cip_code(""));
  EXPECT_FALSE(is_valid_cip_code("01//02"));
}

TEST(CorpusStats, PerFosCounts) {
  const std::vector<SyllabusRecord> c = {rec("1", "Biology"), rec("2", "Biology"), rec("3", "Physics")};
  const auto s = corpus_stats(c);
  EXPECT_EQ(s.n_syllabi, 3u);
  EXPECT_EQ(s.per_fos, (std::map<std::string, std::size_t>{{"Biology", 2}, {"Physics", 1}}));
}

TEST(CorpusStats, Empty) {
  const auto s = corpus_stats(std::vector<SyllabusRecord>{});
  EXPECT_EQ(s.n_syllabi, 0u);
  EXPECT_TRUE(s.per_fos.empty());
  EXPECT_TRUE(s.per_year.empty());
  EXPECT_TRUE(s.per_state.empty());
  EXPECT_TRUE(s.per_sector.empty());
}

TEST(CorpusStats, MissingBucket) {
  const std::vector<SyllabusRecord> c = {rec("1", "B"), rec("2", "B", std::nullopt), rec("3", "B"),
                                         rec("4", "B", std::nullopt), rec("5", "B")};
  const auto s = corpus_stats(c);
  EXPECT_EQ(s.per_state.at(std::string(kMissingBucket)), 2u);
  EXPECT_EQ(s.per_state.at("CA"), 3u);
}

TEST(CorpusStats, BucketsSumToTotalAndDeterministic) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<SyllabusRecord> c;
    const int n = static_cast<int>(rng() % 50);
    for (int i = 0; i < n; ++i) {
      std::optional<std::string> fos;
      if (rng() % 4) fos = "F" + std::to_string(rng() % 5);
      auto r = rec(std::to_string(i), fos);
      if (rng() % 3 == 0) r.year.reset();
      c.push_back(r);
    }
    const auto s = corpus_stats(c);
    auto total = [](const std::map<std::string, std::size_t>& m) {
      std::size_t t = 0;
      for (const auto& [k, v] : m) t += v;
      return t;
    };
    EXPECT_EQ(total(s.per_fos), s.n_syllabi);
    EXPECT_EQ(total(s.per_year), s.n_syllabi);
    EXPECT_EQ(total(s.per_state), s.n_syllabi);
    EXPECT_EQ(total(s.per_sector), s.n_syllabi);
    EXPECT_EQ(s, corpus_stats(c));
  }
}

TEST(PhraseList, NormalizesAndDedups) {
  EXPECT_EQ(parse_phrase_list("Office Hours\nplagiarism\n"), (PhraseList{"office hours", "plagiarism"}));
  EXPECT_EQ(parse_phrase_list("Analyze\nanalyze"), (PhraseList{"analyze"}));
  EXPECT_EQ(parse_phrase_list("# header\n  Due   Date \n\n"), (PhraseList{"due date"}));
}

TEST(PhraseList, OnlyCommentsIsEmptyList) {
  try {
    parse_phrase_list("# c\n\n   \n# d\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyList);
  }
}

TEST(PhraseList, LoadIsIdempotent) {
  TempDir dir;
  const auto first = load_phrase_list(dir.write("p.txt", "# x\nB\na\nA\nc d\n"));
  const auto second = load_phrase_list(dir.write("q.txt", serialize_phrase_list(first)));
  EXPECT_EQ(first, second);
}
