#include <gtest/gtest.h>

#include <charconv>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "skillatlas/error.hpp"
#include "skillatlas/util.hpp"

using namespace skillatlas;

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(DeriveSeed, DistinctStreams) {
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
  EXPECT_EQ(derive_seed(42, 7), derive_seed(42, 7));
}

TEST(Text, NormalizeCollapsesWhitespace) {
  EXPECT_EQ(normalize_text("  Hello\t\tWORLD \n again "), "hello world again");
  EXPECT_EQ(normalize_text(""), "");
  EXPECT_EQ(trim("  x y  "), "x y");
}

TEST(FormatDouble, RoundTrips) {
  EXPECT_EQ(format_double(0.7), "0.7");
  EXPECT_EQ(format_double(-0.0), "0");
  EXPECT_EQ(format_double(1.0), "1");
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng);
    const std::string s = format_double(v);
    double back = 0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    EXPECT_EQ(back, v);
  }
}

TEST(PairwiseSum, MatchesExactSumOnIntegers) {
  std::vector<double> v;
  for (int i = 1; i <= 1000; ++i) v.push_back(i);
  EXPECT_EQ(pairwise_sum(v), 500500.0);
  EXPECT_EQ(pairwise_sum(std::vector<double>{}), 0.0);
}

TEST(PairwiseSum, MoreAccurateThanNaive) {
  std::vector<double> v(1 << 20, 0.1);
  const double exact = 0.1L * (1 << 20);
  EXPECT_NEAR(pairwise_sum(v), exact, 1e-8);
}

TEST(Percentile, LinearInterpolation) {
  const std::vector<double> v = {1, 2, 3, 4, 5};
  EXPECT_DOUBLE_EQ(percentile_sorted(v, 0), 1);
  EXPECT_DOUBLE_EQ(percentile_sorted(v, 100), 5);
  EXPECT_DOUBLE_EQ(percentile_sorted(v, 50), 3);
  EXPECT_DOUBLE_EQ(percentile_sorted(v, 60), 3.4);
  EXPECT_DOUBLE_EQ(percentile_sorted(std::vector<double>{7}, 75), 7);
}

TEST(ParallelFor, VisitsEveryIndexOnce) {
  for (unsigned jobs : {1u, 2u, 7u}) {
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), jobs, [&](std::size_t i) { hits[i]++; });
    for (int h : hits) EXPECT_EQ(h, 1);
  }
}

TEST(ParallelFor, RethrowsLowestIndexFailure) {
  for (unsigned jobs : {1u, 4u}) {
    try {
      parallel_for(100, jobs, [](std::size_t i) {
        if (i == 17 || i == 80) throw std::runtime_error("fail " + std::to_string(i));
      });
      FAIL() << "expected throw";
    } catch (const std::runtime_error& e) {
      EXPECT_STREQ(e.what(), "fail 17");
    }
  }
}

TEST(Errors, CategoriesAndExitCodes) {
  EXPECT_EQ(exit_code_for(category_of(Errc::MalformedInput)), 1);
  EXPECT_EQ(exit_code_for(category_of(Errc::ConfigInvalid)), 2);
  EXPECT_EQ(exit_code_for(category_of(Errc::ProviderTimeout)), 3);
  EXPECT_EQ(exit_code_for(category_of(Errc::ProviderUnavailable)), 3);
  const ConfigError e("paths.corpus", "missing");
  EXPECT_EQ(e.field(), "paths.corpus");
  EXPECT_EQ(e.category(), ErrorCategory::Config);
}

TEST(Files, ReadMissingThrows) {
  try {
    read_file("/nonexistent/skillatlas/file");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::FileNotFound);
  }
}
