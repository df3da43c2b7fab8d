#include <gtest/gtest.h>

#include <httplib.h>

#include <cmath>
#include <nlohmann/json.hpp>
#include <random>
#include <thread>

#include "skillatlas/embed.hpp"
#include "skillatlas/error.hpp"
#include "test_support.hpp"

using namespace skillatlas;
using skillatlas::testing::TempDir;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> nd;
  std::vector<double> v(n);
  for (auto& x : v) x = nd(rng);
  return v;
}

ProviderConfig stdio_cfg(const std::string& mode, std::size_t dim = 8, double timeout = 5.0) {
  ProviderConfig cfg;
  cfg.kind = ProviderKind::Stdio;
  cfg.endpoint_or_path = std::string(SKILLATLAS_FAKE_EMBEDDER) + " " + std::to_string(dim) + " 3 " + mode;
  cfg.dim = dim;
  cfg.batch_size = 2;
  cfg.timeout_seconds = timeout;
  return cfg;
}

template <class F>
Errc error_code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return Errc::InvalidArgument;
}

}  // namespace

TEST(Cosine, Identities) {
  const EmbeddingVector v{{0.3, -1.2, 2.0}};
  EmbeddingVector neg = v;
  for (auto& x : neg.values) x = -x;
  EXPECT_DOUBLE_EQ(cosine(v, v), 1.0);
  EXPECT_DOUBLE_EQ(cosine(v, neg), -1.0);
  EXPECT_EQ(cosine(EmbeddingVector{{1, 0}}, EmbeddingVector{{0, 1}}), 0.0);
}

TEST(Cosine, Errors) {
  EXPECT_EQ(error_code_of([] { cosine(EmbeddingVector{{1, 0}}, EmbeddingVector{{1, 0, 0}}); }), Errc::DimensionMismatch);
  EXPECT_EQ(error_code_of([] { cosine(EmbeddingVector{{0, 0}}, EmbeddingVector{{1, 0}}); }), Errc::ZeroNormVector);
}

TEST(Cosine, SymmetryAndScaleInvariance) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> alpha(0.01, 100.0);
  for (int i = 0; i < 1000; ++i) {
    auto a = random_vec(rng, 17);
    auto b = random_vec(rng, 17);
    const double ab = cosine(a, b);
    EXPECT_LE(std::abs(ab - cosine(b, a)), 1e-15);
    EXPECT_GE(ab, -1.0);
    EXPECT_LE(ab, 1.0);
    const double k = alpha(rng);
    for (auto& x : a) x *= k;
    EXPECT_NEAR(cosine(a, b), ab, 1e-12);
  }
}

TEST(TestProvider, DeterministicAndNormalized) {
  const auto a = test_provider("Analyze data", 64, 9);
  const auto b = test_provider("Analyze data", 64, 9);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.dim(), 64u);
  double n2 = 0;
  for (double x : a.values) n2 += x * x;
  EXPECT_NEAR(std::sqrt(n2), 1.0, 1e-12);
  EXPECT_EQ(test_provider("  analyze   DATA ", 64, 9), a);
  EXPECT_NE(test_provider("Analyze data", 64, 10), a);
}

TEST(TestProvider, DistinctTextsNearlyOrthogonal) {
  std::mt19937_64 rng(2);
  const std::string alphabet = "abcdefghijklmnopqrstuvwxyz ";
  auto random_text = [&] {
    std::string s;
    for (int i = 0; i < 40; ++i) s.push_back(alphabet[rng() % alphabet.size()]);
    return s;
  };
  for (int i = 0; i < 1000; ++i) {
    EXPECT_LT(std::abs(cosine(test_provider(random_text(), 768, 1), test_provider(random_text(), 768, 1))), 0.2);
  }
}

TEST(EmbedBatch, TestProviderShapes) {
  ProviderConfig cfg;
  cfg.dim = 16;
  const std::vector<std::string> two = {"a", "a"};
  const auto v = embed_batch(two, cfg);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0], v[1]);
  const std::vector<std::string> one = {"a"};
  EXPECT_EQ(embed_batch(one, cfg)[0].dim(), 16u);
  EXPECT_TRUE(embed_batch(std::vector<std::string>{}, cfg).empty());
}

TEST(EmbedBatch, BatchSizeDoesNotChangeOutput) {
  TestEmbeddingProvider p(12, 4);
  std::vector<std::string> texts;
  for (int i = 0; i < 37; ++i) texts.push_back("text " + std::to_string(i));
  EXPECT_EQ(embed_batch(texts, p, 1), embed_batch(texts, p, 64));
  EXPECT_EQ(embed_batch(texts, p, 5), embed_batch(texts, p, 64));
}

TEST(TestProvider, RejectsTinyDim) {
  EXPECT_THROW(TestEmbeddingProvider(1, 0), ConfigError);
}

TEST(CacheProvider, RoundTripAndMissingKey) {
  TempDir dir;
  const std::vector<std::string> texts = {"Analyze data", "Write reports"};
  TestEmbeddingProvider source(8, 1);
  const auto vecs = source.embed(texts);
  const auto path = dir.path() / "cache.jsonl";
  write_embedding_cache(path, texts, vecs);
  CacheEmbeddingProvider cache(path, 8);
  EXPECT_EQ(cache.size(), 2u);
  const std::vector<std::string> query = {"write   REPORTS", "Analyze data"};
  const auto got = cache.embed(query);
  EXPECT_EQ(got[0], vecs[1]);
  EXPECT_EQ(got[1], vecs[0]);
  const std::vector<std::string> missing = {"Unknown sentence"};
  try {
    embed_batch(missing, cache, 4);
    FAIL();
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.code(), Errc::ProviderUnavailable);
    EXPECT_NE(std::string(e.what()).find(cache_key("Unknown sentence")), std::string::npos);
  }
}

TEST(CacheProvider, MissingFile) {
  EXPECT_EQ(error_code_of([] { CacheEmbeddingProvider("/nonexistent/cache.jsonl", 8); }), Errc::ProviderUnavailable);
}

TEST(MemoProvider, SendsRepeatedTextsOnce) {
  struct Counting : EmbeddingProvider {
    std::size_t calls = 0;
    std::size_t texts = 0;
    std::string id() const override { return "counting"; }
    std::size_t dim() const override { return 4; }
    std::vector<EmbeddingVector> embed(std::span<const std::string> t) override {
      ++calls;
      texts += t.size();
      std::vector<EmbeddingVector> out;
      for (const auto& s : t) out.push_back(test_provider(s, 4, 0));
      return out;
    }
  };
  auto inner = std::make_shared<Counting>();
  MemoEmbeddingProvider memo(inner);
  const std::vector<std::string> a = {"x", "y", "x"};
  const auto first = memo.embed(a);
  EXPECT_EQ(first[0], first[2]);
  EXPECT_EQ(inner->texts, 2u);
  const std::vector<std::string> b = {"y", "X"};
  const auto second = memo.embed(b);
  EXPECT_EQ(second[0], first[1]);
  EXPECT_EQ(inner->texts, 2u);
}

TEST(EmbedBatch, ReportsFailingBatchIndex) {
  struct FailsThird : EmbeddingProvider {
    std::size_t n = 0;
    std::string id() const override { return "f"; }
    std::size_t dim() const override { return 4; }
    std::vector<EmbeddingVector> embed(std::span<const std::string> t) override {
      if (n++ == 2) throw ProviderError(Errc::ProviderTimeout, "slow", 0);
      std::vector<EmbeddingVector> out;
      for (const auto& s : t) out.push_back(test_provider(s, 4, 0));
      return out;
    }
  } p;
  const std::vector<std::string> texts(10, "t");
  try {
    embed_batch(texts, p, 3);
    FAIL();
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.batch_index(), 2u);
    EXPECT_EQ(e.code(), Errc::ProviderTimeout);
  }
}

TEST(EmbedBatch, RejectsBadShapes) {
  struct Bad : EmbeddingProvider {
    int mode;
    explicit Bad(int m) : mode(m) {}
    std::string id() const override { return "bad"; }
    std::size_t dim() const override { return 3; }
    std::vector<EmbeddingVector> embed(std::span<const std::string> t) override {
      std::vector<EmbeddingVector> out(t.size(), EmbeddingVector{{1, 0, 0}});
      if (mode == 0) out.pop_back();
      if (mode == 1) out[0].values.push_back(1);
      if (mode == 2) out[0].values[1] = std::nan("");
      return out;
    }
  };
  const std::vector<std::string> texts = {"a", "b"};
  for (int mode : {0, 1, 2}) {
    Bad p(mode);
    EXPECT_THROW(embed_batch(texts, p, 8), ProviderError) << mode;
  }
  Bad wrong_dim(1);
  EXPECT_EQ(error_code_of([&] { embed_batch(texts, wrong_dim, 8); }), Errc::DimensionMismatch);
}

TEST(StdioProvider, MatchesTestProvider) {
  StdioEmbeddingProvider p(stdio_cfg("ok"));
  const std::vector<std::string> texts = {"one", "two", "three"};
  const auto v = embed_batch(texts, p, 2);
  ASSERT_EQ(v.size(), 3u);
  for (std::size_t i = 0; i < texts.size(); ++i) EXPECT_EQ(v[i], test_provider(texts[i], 8, 3));
}

TEST(StdioProvider, Failures) {
  const std::vector<std::string> texts = {"one"};
  {
    StdioEmbeddingProvider p(stdio_cfg("hang", 8, 0.3));
    EXPECT_EQ(error_code_of([&] { embed_batch(texts, p, 2); }), Errc::ProviderTimeout);
  }
  {
    StdioEmbeddingProvider p(stdio_cfg("wrong-dim"));
    EXPECT_EQ(error_code_of([&] { embed_batch(texts, p, 2); }), Errc::DimensionMismatch);
  }
  {
    StdioEmbeddingProvider p(stdio_cfg("bad-id"));
    EXPECT_EQ(error_code_of([&] { embed_batch(texts, p, 2); }), Errc::ProviderUnavailable);
  }
  {
    StdioEmbeddingProvider p(stdio_cfg("exit"));
    EXPECT_EQ(error_code_of([&] { embed_batch(texts, p, 2); }), Errc::ProviderUnavailable);
  }
}

TEST(HttpProvider, WireProtocol) {
  httplib::Server server;
  int status = 200;
  std::size_t reply_dim = 6;
  server.Post("/v1/embed", [&](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    nlohmann::json out;
    out["dim"] = reply_dim;
    out["vectors"] = nlohmann::json::array();
    for (const auto& t : body.at("texts")) out["vectors"].push_back(test_provider(t.get<std::string>(), reply_dim, 5).values);
    res.status = status;
    res.set_content(out.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ProviderConfig cfg;
  cfg.kind = ProviderKind::Http;
  cfg.endpoint_or_path = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  cfg.dim = 6;
  cfg.timeout_seconds = 5;
  HttpEmbeddingProvider p(cfg);
  const std::vector<std::string> texts = {"alpha", "beta", "gamma"};
  const auto v = embed_batch(texts, p, 2);
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v[2], test_provider("gamma", 6, 5));

  status = 503;
  EXPECT_EQ(error_code_of([&] { embed_batch(texts, p, 2); }), Errc::ProviderUnavailable);
  status = 200;
  reply_dim = 5;
  EXPECT_EQ(error_code_of([&] { embed_batch(texts, p, 2); }), Errc::DimensionMismatch);

  server.stop();
  th.join();
}

TEST(HttpProvider, UnreachableAndBadEndpoint) {
  ProviderConfig cfg;
  cfg.kind = ProviderKind::Http;
  cfg.endpoint_or_path = "http://127.0.0.1:1";
  cfg.dim = 4;
  cfg.timeout_seconds = 1;
  HttpEmbeddingProvider p(cfg);
  const std::vector<std::string> texts = {"x"};
  EXPECT_THROW(embed_batch(texts, p, 2), ProviderError);
  cfg.endpoint_or_path = "no-scheme";
  EXPECT_THROW({ HttpEmbeddingProvider bad(cfg); }, ConfigError);
}

TEST(ProviderKind, Names) {
  for (auto k : {ProviderKind::Http, ProviderKind::Stdio, ProviderKind::Cache, ProviderKind::Test}) {
    EXPECT_EQ(parse_provider_kind(provider_kind_name(k)), k);
  }
  EXPECT_THROW(parse_provider_kind("bogus"), Error);
}
