#include <gtest/gtest.h>

#include <cstdio>
#include <nlohmann/json.hpp>
#include <sys/wait.h>

#include "skillatlas/error.hpp"
#include "skillatlas/pipeline.hpp"
#include "skillatlas/util.hpp"
#include "test_support.hpp"

using namespace skillatlas;
using skillatlas::testing::TempDir;
namespace fs = std::filesystem;

namespace {

const fs::path kData = SKILLATLAS_TEST_DATA_DIR;

struct CliResult {
  int exit_code = -1;
  std::string stderr_text;
};

CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string("'") + SKILLATLAS_CLI + "' " + args + " 2>&1 1>/dev/null";
  CliResult r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.stderr_text.append(buf, n);
  const int status = ::pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

nlohmann::json error_json(const CliResult& r) {
  const auto pos = r.stderr_text.find("{\"error\"");
  if (pos == std::string::npos) return {};
  const auto end = r.stderr_text.find('\n', pos);
  return nlohmann::json::parse(r.stderr_text.substr(pos, end - pos));
}

std::string field_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<no ConfigError>";
}

std::string config_arg() { return "-c '" + (kData / "config.json").string() + "'"; }

}  // namespace

TEST(Config, BundledConfigLoads) {
  const auto cfg = load_config(kData / "config.json");
  EXPECT_EQ(cfg.seed, 20240611u);
  EXPECT_EQ(cfg.provider.kind, ProviderKind::Test);
  EXPECT_EQ(cfg.provider.dim, 128u);
  EXPECT_EQ(cfg.paths.corpus, kData / "corpus.jsonl");
  EXPECT_EQ(cfg.forest_grid.size(), 8u);
  EXPECT_NO_THROW(validate_config(cfg, "all"));
}

TEST(Config, ErrorsNameTheField) {
  EXPECT_EQ(field_of([] { parse_config(R"({"paths":{"corpsu":"x"}})", "/"); }), "paths.corpsu");
  EXPECT_EQ(field_of([] { parse_config(R"({"options":{"mask_threshold":2}})", "/"); }), "options.mask_threshold");
  EXPECT_EQ(field_of([] { parse_config(R"({"provider":{"dim":1}})", "/"); }), "provider.dim");
  EXPECT_EQ(field_of([] { parse_config(R"({"options":{"elbow_metric":"cosine"}})", "/"); }), "options.elbow_metric");
  EXPECT_EQ(field_of([] { parse_config("not json", "/"); }), "config");
  EXPECT_EQ(field_of([] { load_config("/nonexistent/config.json"); }), "config");
}

TEST(Config, ValidationChecksPaths) {
  auto cfg = load_config(kData / "config.json");
  cfg.paths.corpus = "/nonexistent/corpus.jsonl";
  EXPECT_EQ(field_of([&] { validate_config(cfg, "prep"); }), "paths.corpus");
  EXPECT_NO_THROW(validate_config(cfg, "train-abilities"));
  EXPECT_EQ(field_of([&] { validate_config(cfg, "bogus"); }), "subcommand");
}

TEST(Config, OverridesAndCanonicalHash) {
  auto cfg = load_config(kData / "config.json");
  const auto before = cfg.canonical_json();
  apply_override(cfg, "paths.output_dir=/tmp/elsewhere", kData);
  cfg.jobs = 8;
  EXPECT_EQ(cfg.canonical_json(), before);
  apply_override(cfg, "options.mask_top_n=25", kData);
  EXPECT_EQ(cfg.options.mask_top_n, 25u);
  EXPECT_NE(cfg.canonical_json(), before);
  apply_override(cfg, "options.elbow_metric=euclidean", kData);
  EXPECT_EQ(cfg.options.elbow_metric, DistanceMetric::Euclidean);
  EXPECT_EQ(field_of([&] { apply_override(cfg, "no-equals", kData); }), "set");
}

TEST(Config, SubcommandList) {
  const auto& names = subcommand_names();
  for (const char* n : {"ingest-stats", "prep", "score", "aggregate", "dedup", "train-abilities", "apply-abilities",
                        "rca", "mask", "topk", "distinctiveness", "cluster", "communities", "kl", "sufficiency", "all"}) {
    EXPECT_NE(std::find(names.begin(), names.end(), n), names.end()) << n;
  }
}

TEST(Pipeline, PartialRunsWriteManifests) {
  TempDir dir;
  auto cfg = load_config(kData / "config.json");
  cfg.paths.output_dir = dir.path();
  const auto summary = run_subcommand("prep", cfg);
  EXPECT_TRUE(fs::exists(dir.path() / "sentences.jsonl"));
  const auto manifest = nlohmann::json::parse(read_file(dir.path() / "manifests" / "prep.json"));
  EXPECT_EQ(manifest.at("subcommand"), "prep");
  EXPECT_EQ(manifest.at("config_sha256"), sha256_hex(cfg.canonical_json()));
  const auto& inputs = manifest.at("inputs");
  EXPECT_TRUE(inputs.contains("corpus"));
  EXPECT_FALSE(inputs.contains("dwa_taxonomy"));
  EXPECT_EQ(inputs.at("corpus"), sha256_file_hex(cfg.paths.corpus));
  for (const auto& [name, hash] : manifest.at("outputs").items()) {
    EXPECT_EQ(hash, sha256_file_hex(dir.path() / name));
  }
  const auto first = read_file(dir.path() / "sentences.jsonl");
  run_subcommand("prep", cfg);
  EXPECT_EQ(read_file(dir.path() / "sentences.jsonl"), first);
}

TEST(Pipeline, MissingArtifactIsDataError) {
  TempDir dir;
  auto cfg = load_config(kData / "config.json");
  cfg.paths.output_dir = dir.path();
  try {
    run_subcommand("aggregate", cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::Data);
    EXPECT_EQ(e.code(), Errc::FileNotFound);
  }
}

TEST(Cli, MissingConfigExitsTwo) {
  const auto r = run_cli("ingest-stats");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_EQ(error_json(r)["error"]["field"], "config");
}

TEST(Cli, NonexistentCorpusExitsTwo) {
  TempDir dir;
  const auto r = run_cli("prep " + config_arg() + " -o '" + dir.path().string() + "' --set paths.corpus=/nonexistent.jsonl");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_EQ(error_json(r)["error"]["field"], "paths.corpus");
}

TEST(Cli, MissingArtifactExitsOne) {
  TempDir dir;
  const auto r = run_cli("rca " + config_arg() + " -o '" + dir.path().string() + "'");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_EQ(error_json(r)["error"]["category"], "data");
}

TEST(Cli, UnreachableProviderExitsThree) {
  TempDir dir;
  ASSERT_EQ(run_cli("prep " + config_arg() + " -o '" + dir.path().string() + "'").exit_code, 0);
  const auto r = run_cli("score " + config_arg() + " -o '" + dir.path().string() +
                         "' --set provider.kind=http --set provider.endpoint=http://127.0.0.1:1 --set provider.timeout_seconds=1");
  EXPECT_EQ(r.exit_code, 3);
  const auto e = error_json(r)["error"];
  EXPECT_EQ(e["category"], "provider");
  EXPECT_EQ(e["batch_index"], 0);
}

TEST(Cli, UnknownSubcommandIsConfigError) {
  EXPECT_EQ(run_cli("frobnicate " + config_arg()).exit_code, 2);
}
