#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "skillatlas/error.hpp"
#include "skillatlas/skill_score.hpp"
#include "skillatlas/util.hpp"
#include "test_support.hpp"

using namespace skillatlas;
using skillatlas::testing::TempDir;

namespace {

SkillTaxonomy mini_taxonomy(std::size_t n) {
  SkillTaxonomy t;
  for (std::size_t i = 0; i < n; ++i) t.entries.push_back({"D" + std::to_string(i), "skill descriptor " + std::to_string(i)});
  return t;
}

std::vector<Sentence> make_sentences(const std::vector<std::string>& raw, const std::string& id = "syl") {
  std::vector<Sentence> out;
  for (std::size_t i = 0; i < raw.size(); ++i) out.push_back({id, i, raw[i], normalize_text(raw[i])});
  return out;
}

// Full sentence x skill cosine matrix, reduced by column max.
std::vector<double> brute_force(const std::vector<Sentence>& sents, const SkillTaxonomy& tax, std::size_t dim,
                                std::uint64_t seed) {
  std::vector<std::vector<double>> sim(sents.size(), std::vector<double>(tax.size()));
  for (std::size_t i = 0; i < sents.size(); ++i)
    for (std::size_t s = 0; s < tax.size(); ++s)
      sim[i][s] = cosine(test_provider(sents[i].text, dim, seed), test_provider(tax.entries[s].text, dim, seed));
  std::vector<double> out(tax.size());
  for (std::size_t s = 0; s < tax.size(); ++s) {
    out[s] = sim[0][s];
    for (std::size_t i = 1; i < sents.size(); ++i) out[s] = std::max(out[s], sim[i][s]);
  }
  return out;
}

}  // namespace

TEST(LoadTaxonomy, SmallCsvWarnsAboutSize) {
  TempDir dir;
  const auto p = dir.write("dwa.csv", "dwa_id,dwa_title\nA,Analyze data\nB,Write reports\nC,Teach classes\n");
  std::vector<std::string> warnings;
  const auto t = load_taxonomy(p, TaxonomyKind::Dwa, &warnings);
  EXPECT_EQ(t.size(), 3u);
  EXPECT_EQ(t.ids(), (std::vector<std::string>{"A", "B", "C"}));
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("expected 2070"), std::string::npos);
}

TEST(LoadTaxonomy, DuplicateId) {
  TempDir dir;
  const auto p = dir.write("dwa.csv", "dwa_id,dwa_title\nA,x\nA,y\n");
  try {
    load_taxonomy(p, TaxonomyKind::Dwa);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DuplicateSkillId);
  }
}

TEST(LoadTaxonomy, OnetTabFileAndOtherKinds) {
  TempDir dir;
  const auto dwa = dir.write("DWA Reference.txt",
                             "Element ID\tIWA ID\tDWA ID\tDWA Title\n4.A.1\t4.A.1.a\t4.A.1.a.1.I01.D01\tStudy details\n");
  const auto t = load_taxonomy(dwa, TaxonomyKind::Dwa);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t.entries[0].skill_id, "4.A.1.a.1.I01.D01");
  EXPECT_EQ(t.entries[0].text, "Study details");
  const auto tasks = load_taxonomy(dir.write("t.csv", "task_id,task_statement\n1,Do it\n"), TaxonomyKind::Task);
  EXPECT_EQ(tasks.kind, TaxonomyKind::Task);
  const auto ab = load_taxonomy(dir.write("a.csv", "ability_id,ability_name\n1.A.1,Oral\n"), TaxonomyKind::Ability);
  EXPECT_EQ(ab.entries[0].text, "Oral");
  EXPECT_NE(t.fingerprint(), ab.fingerprint());
}

TEST(LoadTaxonomy, BundledSyntheticTaxonomy) {
  const auto t = load_taxonomy(std::string(SKILLATLAS_TEST_DATA_DIR) + "/dwa_reference.csv", TaxonomyKind::Dwa);
  EXPECT_EQ(t.size(), 50u);
}

TEST(ScoreSyllabus, ExactSkillTextScoresOne) {
  const auto tax = mini_taxonomy(5);
  TestEmbeddingProvider p(32, 1);
  const auto v = score_syllabus(make_sentences({"unrelated words here", tax.entries[3].text}), tax, p);
  EXPECT_EQ(v.scores[3], 1.0);
  EXPECT_FALSE(v.empty_content);
}

TEST(ScoreSyllabus, EmptyContent) {
  const auto tax = mini_taxonomy(4);
  TestEmbeddingProvider p(16, 1);
  const auto v = score_syllabus({}, tax, p);
  EXPECT_TRUE(v.empty_content);
  EXPECT_EQ(v.scores, std::vector<double>(4, 0.0));
}

TEST(ScoreSyllabus, ThreeByTwoOracle) {
  const auto tax = mini_taxonomy(2);
  TestEmbeddingProvider p(24, 8);
  const auto sents = make_sentences({"first sentence", "second one", "third"});
  EXPECT_EQ(score_syllabus(sents, tax, p).scores, brute_force(sents, tax, 24, 8));
}

TEST(ScoreSyllabus, OracleEquivalenceAndProperties) {
  const auto tax = mini_taxonomy(20);
  TestEmbeddingProvider p(48, 3);
  SkillScorer scorer(tax, p, 7);
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<std::string> raw;
    for (std::size_t i = 0, n = 1 + rng() % 20; i < n; ++i) raw.push_back("sentence " + std::to_string(rng() % 1000));
    const auto sents = make_sentences(raw);
    const auto v = scorer.score("syl", sents);
    EXPECT_EQ(v.scores, brute_force(sents, tax, 48, 3));
    for (double x : v.scores) {
      EXPECT_GE(x, -1.0);
      EXPECT_LE(x, 1.0);
    }
    auto shuffled = sents;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_EQ(scorer.score("syl", shuffled).scores, v.scores);
    auto more = sents;
    more.push_back({"syl", more.size(), "extra sentence", "extra sentence"});
    const auto w = scorer.score("syl", more);
    for (std::size_t s = 0; s < tax.size(); ++s) EXPECT_GE(w.scores[s], v.scores[s]);
  }
}

TEST(NegativeReport, Fractions) {
  const auto tax = mini_taxonomy(2);
  std::vector<SkillVector> vs(4);
  for (auto& v : vs) v.scores = {0.1, 0.2};
  auto none = negative_value_report(vs, tax);
  for (const auto& n : none) EXPECT_EQ(n.fraction, 0.0);
  vs[2].scores[1] = -0.05;
  const auto r = negative_value_report(vs, tax);
  EXPECT_EQ(r[0].skill_id, "D1");
  EXPECT_EQ(r[0].fraction, 0.25);
  EXPECT_EQ(r[1].fraction, 0.0);
}

TEST(SkillVectorIo, JsonlRoundTrip) {
  TempDir dir;
  std::vector<SkillVector> vs = {{"a", TaxonomyKind::Dwa, {0.1, -0.30000000000000004, 1.0 / 3.0}, false},
                                 {"b", TaxonomyKind::Dwa, {0, 0, 0}, true}};
  const auto p = dir.path() / "v.jsonl";
  write_skill_vectors(p, vs);
  EXPECT_EQ(read_skill_vectors(p), vs);
  EXPECT_EQ(skill_vector_from_jsonl(skill_vector_to_jsonl(vs[0])), vs[0]);
}

TEST(SkillVectorIo, RequireUniform) {
  std::vector<SkillVector> vs = {{"a", TaxonomyKind::Dwa, {0.1, 0.2}, false}, {"b", TaxonomyKind::Task, {0.1, 0.2}, false}};
  try {
    require_uniform(vs, TaxonomyKind::Dwa, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MixedTaxonomy);
  }
}
