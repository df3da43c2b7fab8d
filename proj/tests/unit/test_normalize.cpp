#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "skillatlas/error.hpp"
#include "skillatlas/normalize.hpp"
#include "test_support.hpp"

using namespace skillatlas;
using skillatlas::testing::TempDir;

namespace {

FosSkillMatrix make(std::vector<std::vector<double>> rows) {
  FosSkillMatrix m;
  for (std::size_t s = 0; s < rows.front().size(); ++s) m.skill_list.push_back("s" + std::to_string(s));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    m.fos_list.push_back("f" + std::to_string(i));
    m.values.insert(m.values.end(), rows[i].begin(), rows[i].end());
  }
  return m;
}

FosSkillMatrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> r(rows, std::vector<double>(cols));
  for (auto& row : r)
    for (auto& v : row) v = u(rng);
  return make(r);
}

}  // namespace

TEST(Rca, UniformIsOne) {
  const auto r = rca(make({{3, 3, 3}, {3, 3, 3}}));
  for (double v : r.values) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(Rca, HandComputedTwoByTwo) {
  const auto r = rca(make({{2, 0}, {1, 1}}));
  EXPECT_NEAR(r.at(0, 0), 4.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.at(0, 1), 0.0, 1e-12);
  EXPECT_NEAR(r.at(1, 0), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.at(1, 1), 2.0, 1e-12);
}

TEST(Rca, ZeroRow) {
  try {
    rca(make({{1, 2}, {0, 0}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ZeroRowSum);
    EXPECT_NE(std::string(e.what()).find("f1"), std::string::npos);
  }
  EXPECT_THROW(rca(make({{1, 2}, {-1, -3}})), Error);
}

TEST(Rca, NegativesClampedToZero) {
  const auto a = rca(make({{2, -0.5}, {1, 1}}));
  const auto b = rca(make({{2, 0}, {1, 1}}));
  EXPECT_EQ(a.values, b.values);
}

TEST(Rca, RowIdentityOnRandomMatrices) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    const auto m = random_matrix(rng, 2 + rng() % 10, 2 + rng() % 30);
    const auto r = rca(m);
    const double total = std::accumulate(m.values.begin(), m.values.end(), 0.0);
    for (std::size_t i = 0; i < m.n_fos(); ++i) {
      double acc = 0;
      for (std::size_t s = 0; s < m.n_skills(); ++s) {
        double col = 0;
        for (std::size_t k = 0; k < m.n_fos(); ++k) col += m.at(k, s);
        acc += (col / total) * r.at(i, s);
      }
      EXPECT_NEAR(acc, 1.0, 1e-9);
    }
  }
}

TEST(Rca, InvariantToGlobalScaling) {
  std::mt19937_64 rng(2);
  auto m = random_matrix(rng, 5, 8);
  const auto base = rca(m);
  for (auto& v : m.values) v *= 37.5;
  const auto scaled = rca(m);
  for (std::size_t i = 0; i < base.values.size(); ++i) EXPECT_NEAR(scaled.values[i], base.values[i], 1e-12);
}

TEST(Mask, UbiquitousTopSkill) {
  const auto m = make({{9, 1, 2}, {9, 3, 1}, {9, 2, 3}});
  MaskOptions o;
  o.top_n = 1;
  EXPECT_EQ(mask_frequent(m, o), (std::set<std::string>{"s0"}));
}

TEST(Mask, SingleFieldBelowThreshold) {
  std::vector<std::vector<double>> rows(62, std::vector<double>(200, 0.0));
  for (auto& r : rows)
    for (std::size_t s = 0; s < 100; ++s) r[s] = 1.0 + static_cast<double>(s);
  rows[0][150] = 1000;
  const auto mask = mask_frequent(make(rows));
  EXPECT_FALSE(mask.contains("s150"));
}

TEST(Mask, PlantedUbiquitousSkills) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> rows(5, std::vector<double>(10));
  for (std::size_t f = 0; f < 5; ++f) {
    for (auto& v : rows[f]) v = u(rng);
    rows[f][2] = 5 + u(rng);
    rows[f][7] = 5 + u(rng);
  }
  MaskOptions o;
  o.top_n = 3;
  o.threshold = 0.8;
  // other skills can reach a top-3 slot in at most... check by counting directly
  const auto m = make(rows);
  std::set<std::string> expected;
  for (std::size_t s = 0; s < 10; ++s) {
    int hits = 0;
    for (std::size_t f = 0; f < 5; ++f) {
      int better = 0;
      for (std::size_t t = 0; t < 10; ++t)
        if (rows[f][t] > rows[f][s] || (rows[f][t] == rows[f][s] && t < s)) ++better;
      if (better < 3) ++hits;
    }
    if (hits >= 4) expected.insert("s" + std::to_string(s));
  }
  EXPECT_TRUE(expected.contains("s2"));
  EXPECT_TRUE(expected.contains("s7"));
  EXPECT_EQ(mask_frequent(m, o), expected);
}

TEST(TopK, Basics) {
  const auto m = make({{0.1, 0.9, 0.5}, {0.3, 0.2, 0.1}});
  EXPECT_TRUE(top_k(m, "f0", 0).empty());
  const auto all = top_k(m, "f0", 10);
  ASSERT_EQ(all.size(), 3u);
  EXPECT_EQ(all[0].skill_id, "s1");
  EXPECT_EQ(all[1].skill_id, "s2");
  EXPECT_EQ(all[2].skill_id, "s0");
  EXPECT_THROW(top_k(m, "nope", 1), Error);
}

TEST(TopK, RcaExampleAndMask) {
  const auto r = rca(make({{2, 0}, {1, 1}}));
  const auto best = top_k(r, "f1", 1);
  ASSERT_EQ(best.size(), 1u);
  EXPECT_EQ(best[0].skill_id, "s1");
  const std::set<std::string> mask = {"s1"};
  const auto masked = top_k(r, "f1", 5, &mask);
  ASSERT_EQ(masked.size(), 1u);
  EXPECT_EQ(masked[0].skill_id, "s0");
}

TEST(TopK, NeverReturnsMaskedOnRandomData) {
  std::mt19937_64 rng(4);
  const auto m = random_matrix(rng, 4, 20);
  std::set<std::string> mask;
  for (int i = 0; i < 20; i += 3) mask.insert("s" + std::to_string(i));
  for (const auto& fos : m.fos_list)
    for (const auto& r : top_k(m, fos, 15, &mask)) EXPECT_FALSE(mask.contains(r.skill_id));
}

TEST(Ols, PerfectLine) {
  const std::vector<double> x = {1, 2, 3, 4, 5};
  const std::vector<double> y = {3, 5, 7, 9, 11};
  const auto r = ols(x, y);
  EXPECT_NEAR(r.slope, 2.0, 1e-12);
  EXPECT_NEAR(r.intercept, 1.0, 1e-12);
  EXPECT_NEAR(r.r_squared, 1.0, 1e-12);
  EXPECT_LT(r.p_value, 1e-6);
}

TEST(Ols, ConstantResponse) {
  const std::vector<double> x = {1, 2, 3, 4};
  const std::vector<double> y = {5, 5, 5, 5};
  const auto r = ols(x, y);
  EXPECT_EQ(r.slope, 0.0);
  EXPECT_EQ(r.r_squared, 0.0);
}

TEST(Ols, RecoversGeneratingSlope) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0, 0.5);
  int inside = 0;
  for (int t = 0; t < 50; ++t) {
    std::vector<double> x, y;
    for (int i = 0; i < 10; ++i) {
      x.push_back(i);
      y.push_back(1.5 * i + 2 + noise(rng));
    }
    const auto r = ols(x, y);
    if (std::abs(r.slope - 1.5) <= 2 * r.slope_stderr) ++inside;
  }
  // a 2-SE band covers the truth about 92% of the time at 8 degrees of freedom
  EXPECT_GE(inside, 40);
}

TEST(Distinctiveness, PercentileFeature) {
  const auto r = rca(make({{1, 2, 3}, {3, 2, 1}, {1, 1, 4}, {2, 2, 2}}));
  const std::map<std::string, double> salary = {{"f0", 50000}, {"f1", 60000}, {"f2", 70000}, {"f3", 55000}};
  const auto d = distinctiveness_regression(r, 50, salary);
  ASSERT_EQ(d.fos.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    auto row = std::vector<double>(r.row(i).begin(), r.row(i).end());
    std::sort(row.begin(), row.end());
    EXPECT_DOUBLE_EQ(d.x[i], row[1]);
  }
  const std::map<std::string, double> few = {{"f0", 1}, {"f1", 2}};
  EXPECT_THROW(distinctiveness_regression(r, 50, few), Error);
}

TEST(FosMatrix, CsvRoundTrip) {
  TempDir dir;
  const auto m = make({{0.1, 1.0 / 3.0}, {2.5, -0.125}});
  const auto back = fos_matrix_from_csv(dir.write("m.csv", fos_matrix_to_csv(m)));
  EXPECT_EQ(back.fos_list, m.fos_list);
  EXPECT_EQ(back.skill_list, m.skill_list);
  EXPECT_EQ(back.values, m.values);
}

TEST(Salary, Loads) {
  TempDir dir;
  const auto s = load_salary_table(dir.write("s.csv", "field_name,median_annual_earnings_usd\nBio,50000\nChem,61000.5\n"));
  EXPECT_EQ(s.at("Chem"), 61000.5);
}
