#include "skillatlas/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "skillatlas/aggregate.hpp"
#include "skillatlas/corpus.hpp"
#include "skillatlas/csv.hpp"
#include "skillatlas/error.hpp"
#include "skillatlas/normalize.hpp"
#include "skillatlas/skill_score.hpp"
#include "skillatlas/text_prep.hpp"
#include "skillatlas/util.hpp"

#ifndef SKILLATLAS_VERSION
#define SKILLATLAS_VERSION "0.0.0"
#endif

namespace skillatlas {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string_view library_version() noexcept { return SKILLATLAS_VERSION; }

// ---- config ---------------------------------------------------------------------

namespace {

template <class T>
T get_as(const json& j, const std::string& field) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(field, "field '" + field + "' has the wrong type");
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::string path_string(const fs::path& p) { return p.generic_string(); }

std::vector<ForestParams> expand_grid(const json& grid) {
  std::vector<std::size_t> trees = {100, 300};
  std::vector<std::size_t> depths = {8, 16, 0};
  std::vector<std::size_t> leaves = {1, 3};
  std::vector<FeatureRule> rules = {FeatureRule::Sqrt, FeatureRule::Third};
  for (auto it = grid.begin(); it != grid.end(); ++it) {
    const std::string field = "forest.grid." + it.key();
    if (!it.value().is_array() || it.value().empty()) throw ConfigError(field, field + " must be a nonempty array");
    if (it.key() == "n_trees") {
      trees = get_as<std::vector<std::size_t>>(it.value(), field);
    } else if (it.key() == "max_depth") {
      depths.clear();
      for (const auto& d : it.value()) depths.push_back(d.is_null() ? 0 : get_as<std::size_t>(d, field));
    } else if (it.key() == "min_samples_leaf") {
      leaves = get_as<std::vector<std::size_t>>(it.value(), field);
    } else if (it.key() == "features") {
      rules.clear();
      for (const auto& f : it.value()) {
        try {
          rules.push_back(parse_feature_rule(get_as<std::string>(f, field)));
        } catch (const ConfigError&) {
          throw;
        } catch (const Error& e) {
          throw ConfigError(field, e.what());
        }
      }
    } else {
      throw ConfigError(field, "unknown field '" + field + "'");
    }
  }
  std::vector<ForestParams> out;
  for (auto t : trees) {
    for (auto d : depths) {
      for (auto l : leaves) {
        for (auto r : rules) {
          if (t == 0 || l == 0) throw ConfigError("forest.grid", "n_trees and min_samples_leaf must be positive");
          ForestParams p;
          p.n_trees = t;
          p.max_depth = d;
          p.min_samples_leaf = l;
          p.features = r;
          out.push_back(p);
        }
      }
    }
  }
  return out;
}

void set_path(PipelineConfig& cfg, const std::string& key, const json& value, const fs::path& base) {
  const std::string field = "paths." + key;
  auto& p = cfg.paths;
  std::map<std::string, fs::path*> required = {
      {"corpus", &p.corpus},           {"learning_phrases", &p.learning_phrases},
      {"logistics_phrases", &p.logistics_phrases}, {"dwa_taxonomy", &p.dwa_taxonomy},
      {"occupation_dwa", &p.occupation_dwa},       {"ability_importance", &p.ability_importance},
      {"employment", &p.employment},   {"salary", &p.salary},
      {"output_dir", &p.output_dir},
  };
  std::map<std::string, std::optional<fs::path>*> optional = {
      {"abbreviations", &p.abbreviations},
      {"task_taxonomy", &p.task_taxonomy},
      {"ability_taxonomy", &p.ability_taxonomy},
  };
  if (auto it = required.find(key); it != required.end()) {
    *it->second = value.is_null() ? fs::path() : resolve(base, get_as<std::string>(value, field));
  } else if (auto it2 = optional.find(key); it2 != optional.end()) {
    if (value.is_null()) {
      it2->second->reset();
    } else {
      *it2->second = resolve(base, get_as<std::string>(value, field));
    }
  } else {
    throw ConfigError(field, "unknown field '" + field + "'");
  }
}

void set_provider(PipelineConfig& cfg, const std::string& key, const json& value, const fs::path& base) {
  const std::string field = "provider." + key;
  auto& pr = cfg.provider;
  if (key == "kind") {
    pr.kind = parse_provider_kind(get_as<std::string>(value, field));
  } else if (key == "endpoint" || key == "command") {
    pr.endpoint_or_path = get_as<std::string>(value, field);
  } else if (key == "path") {
    pr.endpoint_or_path = path_string(resolve(base, get_as<std::string>(value, field)));
  } else if (key == "dim") {
    pr.dim = get_as<std::size_t>(value, field);
    if (pr.dim < 2) throw ConfigError(field, "provider.dim must be at least 2");
  } else if (key == "batch_size") {
    pr.batch_size = get_as<std::size_t>(value, field);
    if (pr.batch_size == 0) throw ConfigError(field, "provider.batch_size must be positive");
  } else if (key == "timeout_seconds") {
    pr.timeout_seconds = get_as<double>(value, field);
    if (!(pr.timeout_seconds > 0.0)) throw ConfigError(field, "provider.timeout_seconds must be positive");
  } else if (key == "seed") {
    pr.seed = get_as<std::uint64_t>(value, field);
  } else {
    throw ConfigError(field, "unknown field '" + field + "'");
  }
}

void set_option(PipelineConfig& cfg, const std::string& key, const json& value) {
  const std::string field = "options." + key;
  auto& o = cfg.options;
  auto fraction = [&](double v) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(field, field + " must lie in [0, 1]");
    return v;
  };
  if (key == "max_malformed_fraction") {
    o.max_malformed_fraction = fraction(get_as<double>(value, field));
  } else if (key == "prefix_match") {
    o.prefix_match = get_as<bool>(value, field);
  } else if (key == "min_tokens") {
    o.min_tokens = get_as<std::size_t>(value, field);
  } else if (key == "dedup_decimals") {
    o.dedup_decimals = get_as<int>(value, field);
    if (o.dedup_decimals < 0 || o.dedup_decimals > 15) throw ConfigError(field, field + " must lie in 0..15");
  } else if (key == "mask_top_n") {
    o.mask_top_n = get_as<std::size_t>(value, field);
  } else if (key == "mask_threshold") {
    o.mask_threshold = fraction(get_as<double>(value, field));
  } else if (key == "top_k") {
    o.top_k = get_as<std::size_t>(value, field);
  } else if (key == "rca_percentiles") {
    o.rca_percentiles = get_as<std::vector<double>>(value, field);
    for (double p : o.rca_percentiles) {
      if (!(p > 0.0 && p < 100.0)) throw ConfigError(field, "percentiles must lie strictly between 0 and 100");
    }
  } else if (key == "kl_epsilon") {
    o.kl_epsilon = get_as<double>(value, field);
    if (!(o.kl_epsilon > 0.0)) throw ConfigError(field, field + " must be positive");
  } else if (key == "occupation_filter") {
    o.occupation_filter = get_as<std::vector<std::string>>(value, field);
  } else if (key == "elbow_metric") {
    o.elbow_metric = parse_metric(get_as<std::string>(value, field));
  } else if (key == "sufficiency_trials") {
    o.sufficiency_trials = get_as<std::size_t>(value, field);
    if (o.sufficiency_trials == 0) throw ConfigError(field, field + " must be positive");
  } else if (key == "sufficiency_min_group") {
    o.sufficiency_min_group = get_as<std::size_t>(value, field);
  } else if (key == "community_min_similarity") {
    o.community_min_similarity = get_as<double>(value, field);
  } else if (key == "binary_dwa_profiles") {
    o.binary_dwa_profiles = get_as<bool>(value, field);
  } else {
    throw ConfigError(field, "unknown field '" + field + "'");
  }
}

void apply_json(PipelineConfig& cfg, const json& root, const fs::path& base) {
  if (!root.is_object()) throw ConfigError("config", "config must be a JSON object");
  for (auto it = root.begin(); it != root.end(); ++it) {
    const std::string& key = it.key();
    const json& v = it.value();
    auto section = [&](auto&& setter) {
      if (!v.is_object()) throw ConfigError(key, "'" + key + "' must be an object");
      for (auto f = v.begin(); f != v.end(); ++f) setter(f.key(), f.value());
    };
    if (key == "paths") {
      section([&](const std::string& k, const json& x) { set_path(cfg, k, x, base); });
    } else if (key == "provider") {
      section([&](const std::string& k, const json& x) { set_provider(cfg, k, x, base); });
    } else if (key == "options") {
      section([&](const std::string& k, const json& x) { set_option(cfg, k, x); });
    } else if (key == "forest") {
      section([&](const std::string& k, const json& x) {
        if (k == "grid") {
          if (!x.is_object()) throw ConfigError("forest.grid", "forest.grid must be an object");
          cfg.forest_grid = expand_grid(x);
        } else if (k == "folds") {
          cfg.cv_folds = get_as<std::size_t>(x, "forest.folds");
          if (cfg.cv_folds < 2) throw ConfigError("forest.folds", "forest.folds must be at least 2");
        } else {
          throw ConfigError("forest." + k, "unknown field 'forest." + k + "'");
        }
      });
    } else if (key == "seed") {
      cfg.seed = get_as<std::uint64_t>(v, "seed");
    } else if (key == "jobs") {
      cfg.jobs = get_as<unsigned>(v, "jobs");
    } else {
      throw ConfigError(key, "unknown field '" + key + "'");
    }
  }
}

}  // namespace

PipelineConfig parse_config(std::string_view json_text, const fs::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("config is not valid JSON: ") + e.what());
  }
  PipelineConfig cfg;
  apply_json(cfg, root, base_dir);
  if (cfg.paths.output_dir.empty()) throw ConfigError("paths.output_dir", "paths.output_dir is required");
  return cfg;
}

PipelineConfig load_config(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw ConfigError("config", "config file not found: " + path.string());
  return parse_config(read_file(path), fs::absolute(path).parent_path());
}

void apply_override(PipelineConfig& cfg, std::string_view assignment, const fs::path& base_dir) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("set", "override must look like section.key=value");
  const std::string key(trim(assignment.substr(0, eq)));
  const std::string raw(trim(assignment.substr(eq + 1)));
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;  // bare strings need no quotes
  }
  json patch = json::object();
  json* cursor = &patch;
  std::string_view rest = key;
  for (;;) {
    const auto dot = rest.find('.');
    if (dot == std::string_view::npos) {
      (*cursor)[std::string(rest)] = value;
      break;
    }
    cursor = &(*cursor)[std::string(rest.substr(0, dot))];
    rest = rest.substr(dot + 1);
  }
  apply_json(cfg, patch, base_dir);
}

std::string PipelineConfig::canonical_json() const {
  json j;
  json p;
  auto opt = [](const std::optional<fs::path>& x) -> json { return x ? json(path_string(*x)) : json(nullptr); };
  p["corpus"] = path_string(paths.corpus);
  p["learning_phrases"] = path_string(paths.learning_phrases);
  p["logistics_phrases"] = path_string(paths.logistics_phrases);
  p["abbreviations"] = opt(paths.abbreviations);
  p["dwa_taxonomy"] = path_string(paths.dwa_taxonomy);
  p["task_taxonomy"] = opt(paths.task_taxonomy);
  p["ability_taxonomy"] = opt(paths.ability_taxonomy);
  p["occupation_dwa"] = path_string(paths.occupation_dwa);
  p["ability_importance"] = path_string(paths.ability_importance);
  p["employment"] = path_string(paths.employment);
  p["salary"] = path_string(paths.salary);
  // Paths are recorded by file name only so relocated copies hash the same.
  for (auto& [k, v] : p.items()) {
    if (v.is_string()) v = fs::path(v.get<std::string>()).filename().string();
  }
  j["paths"] = p;
  j["provider"] = {{"kind", provider_kind_name(provider.kind)},
                   {"endpoint_or_path", provider.kind == ProviderKind::Cache
                                            ? fs::path(provider.endpoint_or_path).filename().string()
                                            : provider.endpoint_or_path},
                   {"dim", provider.dim},
                   {"batch_size", provider.batch_size},
                   {"seed", provider.seed}};
  j["seed"] = seed;
  const auto& o = options;
  j["options"] = {{"max_malformed_fraction", o.max_malformed_fraction},
                  {"prefix_match", o.prefix_match},
                  {"min_tokens", o.min_tokens},
                  {"dedup_decimals", o.dedup_decimals},
                  {"mask_top_n", o.mask_top_n},
                  {"mask_threshold", o.mask_threshold},
                  {"top_k", o.top_k},
                  {"rca_percentiles", o.rca_percentiles},
                  {"kl_epsilon", o.kl_epsilon},
                  {"occupation_filter", o.occupation_filter},
                  {"elbow_metric", metric_name(o.elbow_metric)},
                  {"sufficiency_trials", o.sufficiency_trials},
                  {"sufficiency_min_group", o.sufficiency_min_group},
                  {"community_min_similarity", o.community_min_similarity},
                  {"binary_dwa_profiles", o.binary_dwa_profiles}};
  json grid = json::array();
  for (const auto& g : forest_grid) {
    grid.push_back({{"n_trees", g.n_trees},
                    {"max_depth", g.max_depth == 0 ? json(nullptr) : json(g.max_depth)},
                    {"min_samples_leaf", g.min_samples_leaf},
                    {"features", feature_rule_name(g.features)}});
  }
  j["forest"] = {{"grid", grid}, {"folds", cv_folds}};
  return j.dump();
}

// ---- validation -------------------------------------------------------------------

namespace {

struct PathNeed {
  const char* field;
  bool optional;
};

const std::map<std::string, std::vector<PathNeed>, std::less<>>& path_needs() {
  static const std::map<std::string, std::vector<PathNeed>, std::less<>> needs = {
      {"ingest-stats", {{"corpus", false}, {"abbreviations", true}}},
      {"prep", {{"corpus", false}, {"learning_phrases", false}, {"logistics_phrases", false}, {"abbreviations", true}}},
      {"score", {{"corpus", false}, {"dwa_taxonomy", false}, {"task_taxonomy", true}}},
      {"train-abilities", {{"dwa_taxonomy", false}, {"occupation_dwa", false}, {"ability_importance", false}}},
      {"apply-abilities", {{"dwa_taxonomy", false}, {"ability_taxonomy", true}}},
      {"aggregate", {{"corpus", false}, {"dwa_taxonomy", false}, {"task_taxonomy", true}, {"ability_taxonomy", true}}},
      {"dedup", {{"corpus", false}}},
      {"rca", {{"dwa_taxonomy", false}}},
      {"mask", {{"dwa_taxonomy", false}}},
      {"topk", {{"dwa_taxonomy", false}}},
      {"distinctiveness", {{"salary", false}}},
      {"cluster", {}},
      {"communities", {}},
      {"kl", {{"corpus", false}, {"dwa_taxonomy", false}, {"occupation_dwa", false}, {"employment", false}}},
      {"sufficiency", {{"corpus", false}}},
  };
  return needs;
}

std::optional<fs::path> config_path(const PipelineConfig& cfg, std::string_view field) {
  const auto& p = cfg.paths;
  auto req = [](const fs::path& x) -> std::optional<fs::path> {
    return x.empty() ? std::nullopt : std::optional<fs::path>(x);
  };
  if (field == "corpus") return req(p.corpus);
  if (field == "learning_phrases") return req(p.learning_phrases);
  if (field == "logistics_phrases") return req(p.logistics_phrases);
  if (field == "abbreviations") return p.abbreviations;
  if (field == "dwa_taxonomy") return req(p.dwa_taxonomy);
  if (field == "task_taxonomy") return p.task_taxonomy;
  if (field == "ability_taxonomy") return p.ability_taxonomy;
  if (field == "occupation_dwa") return req(p.occupation_dwa);
  if (field == "ability_importance") return req(p.ability_importance);
  if (field == "employment") return req(p.employment);
  if (field == "salary") return req(p.salary);
  return std::nullopt;
}

}  // namespace

const std::vector<std::string>& subcommand_names() {
  static const std::vector<std::string> names = {
      "ingest-stats", "prep", "score",           "train-abilities", "apply-abilities", "aggregate",
      "dedup",        "rca",  "mask",            "topk",            "distinctiveness", "cluster",
      "communities",  "kl",   "sufficiency",     "all"};
  return names;
}

void validate_config(const PipelineConfig& cfg, std::string_view subcommand) {
  std::vector<std::string> steps;
  if (subcommand == "all") {
    for (const auto& n : subcommand_names()) {
      if (n != "all") steps.push_back(n);
    }
  } else if (path_needs().contains(subcommand)) {
    steps.emplace_back(subcommand);
  } else {
    throw ConfigError("subcommand", "unknown subcommand '" + std::string(subcommand) + "'");
  }
  for (const auto& step : steps) {
    for (const auto& need : path_needs().find(step)->second) {
      const std::string field = std::string("paths.") + need.field;
      const auto path = config_path(cfg, need.field);
      if (!path) {
        if (need.optional) continue;
        throw ConfigError(field, field + " is required by '" + step + "'");
      }
      if (!fs::is_regular_file(*path)) throw ConfigError(field, field + " does not exist: " + path->string());
    }
  }
  if (cfg.paths.output_dir.empty()) throw ConfigError("paths.output_dir", "paths.output_dir is required");
  if (cfg.provider.kind == ProviderKind::Cache && !fs::is_regular_file(cfg.provider.endpoint_or_path)) {
    throw ConfigError("provider.path", "embedding cache not found: " + cfg.provider.endpoint_or_path);
  }
  if ((cfg.provider.kind == ProviderKind::Http || cfg.provider.kind == ProviderKind::Stdio) &&
      cfg.provider.endpoint_or_path.empty()) {
    throw ConfigError(cfg.provider.kind == ProviderKind::Http ? "provider.endpoint" : "provider.command",
                      "provider needs an endpoint or command");
  }
}

// ---- steps ---------------------------------------------------------------------

namespace {

// Tracks what one subcommand reads and writes, then emits its manifest.
class StepContext {
 public:
  StepContext(const PipelineConfig& cfg, std::string name, RunSummary& summary)
      : cfg_(cfg), name_(std::move(name)), summary_(summary), out_(cfg.paths.output_dir) {}

  const PipelineConfig& cfg() const { return cfg_; }

  fs::path input(const std::string& role, const fs::path& path) {
    inputs_[role] = sha256_file_hex(path);
    return path;
  }

  fs::path artifact(const std::string& name) {
    const fs::path p = out_ / name;
    if (!fs::is_regular_file(p)) {
      throw Error(Errc::FileNotFound, "missing artifact " + name + " in " + out_.string() + "; run the step that writes it first");
    }
    inputs_["artifact:" + name] = sha256_file_hex(p);
    return p;
  }

  bool has_artifact(const std::string& name) const { return fs::is_regular_file(out_ / name); }

  void write(const std::string& name, const std::string& content) {
    write_file(out_ / name, content);
    outputs_[name] = sha256_hex(content);
    summary_.outputs.push_back(name);
  }

  void warn(std::string message) { summary_.warnings.push_back(std::move(message)); }

  void finish() {
    json m;
    m["format"] = "skillatlas-manifest";
    m["subcommand"] = name_;
    m["version"] = library_version();
    m["config_sha256"] = sha256_hex(cfg_.canonical_json());
    m["seed"] = cfg_.seed;
    json in = json::object();
    for (const auto& [k, v] : inputs_) in[k] = v;
    json out = json::object();
    for (const auto& [k, v] : outputs_) out[k] = v;
    m["inputs"] = in;
    m["outputs"] = out;
    write_file(out_ / "manifests" / (name_ + ".json"), m.dump(2) + "\n");
  }

 private:
  const PipelineConfig& cfg_;
  std::string name_;
  RunSummary& summary_;
  fs::path out_;
  std::map<std::string, std::string> inputs_;
  std::map<std::string, std::string> outputs_;
};

std::string num(double v) { return format_double(v); }

LoadedCorpus read_corpus(StepContext& ctx) {
  const auto& cfg = ctx.cfg();
  LoadOptions opts;
  opts.max_malformed_fraction = cfg.options.max_malformed_fraction;
  auto loaded = load_corpus(ctx.input("corpus", cfg.paths.corpus), corpus_format_from_path(cfg.paths.corpus), opts);
  for (const auto& e : loaded.report.errors) {
    ctx.warn("corpus line " + std::to_string(e.line_no) + ": " + e.reason);
  }
  return loaded;
}

SegmentOptions segment_options(StepContext& ctx) {
  SegmentOptions opts;
  if (ctx.cfg().paths.abbreviations) {
    opts.abbreviations = load_abbreviation_list(ctx.input("abbreviations", *ctx.cfg().paths.abbreviations));
  }
  return opts;
}

SkillTaxonomy read_taxonomy(StepContext& ctx, const std::string& role, const fs::path& path, TaxonomyKind kind) {
  std::vector<std::string> warnings;
  auto t = load_taxonomy(ctx.input(role, path), kind, &warnings);
  for (auto& w : warnings) ctx.warn(std::move(w));
  return t;
}

void step_ingest_stats(StepContext& ctx) {
  const auto loaded = read_corpus(ctx);
  const auto seg = segment_options(ctx);
  auto stats = corpus_stats(loaded.records);
  std::vector<std::size_t> counts(loaded.records.size());
  parallel_for(loaded.records.size(), ctx.cfg().jobs, [&](std::size_t i) {
    counts[i] = segment(loaded.records[i].text, loaded.records[i].syllabus_id, seg).size();
  });
  if (!counts.empty()) stats.sentence_count_summary = summarize_counts(counts);
  ctx.write("corpus_stats.json", stats_to_json(stats));

  json report;
  report["n_rows"] = loaded.report.n_rows;
  report["n_loaded"] = loaded.records.size();
  report["n_malformed"] = loaded.report.errors.size();
  report["malformed_fraction"] = loaded.report.malformed_fraction();
  json errs = json::array();
  for (const auto& e : loaded.report.errors) errs.push_back({{"line", e.line_no}, {"reason", e.reason}});
  report["errors"] = errs;
  ctx.write("load_report.json", report.dump(2) + "\n");
}

std::string report_json(const FilterReport& r) {
  json j = {{"n_input", r.n_input},
            {"n_removed_logistics", r.n_removed_logistics},
            {"n_removed_no_learning", r.n_removed_no_learning},
            {"n_kept", r.n_kept},
            {"removal_fraction", r.removal_fraction}};
  return j.dump(2) + "\n";
}

void step_prep(StepContext& ctx) {
  const auto& cfg = ctx.cfg();
  const auto loaded = read_corpus(ctx);
  const auto seg = segment_options(ctx);
  const auto learning = load_phrase_list(ctx.input("learning_phrases", cfg.paths.learning_phrases));
  const auto logistics = load_phrase_list(ctx.input("logistics_phrases", cfg.paths.logistics_phrases));
  FilterOptions fopts;
  fopts.prefix_match = cfg.options.prefix_match;
  fopts.min_tokens = cfg.options.min_tokens;
  const LearningFilter filter(logistics, learning, fopts);

  std::vector<FilterResult> results(loaded.records.size());
  parallel_for(loaded.records.size(), cfg.jobs, [&](std::size_t i) {
    const auto& rec = loaded.records[i];
    results[i] = filter.apply(segment(rec.text, rec.syllabus_id, seg));
  });

  FilterReport total;
  std::string lines;
  std::string per_syllabus = csv::join_line({"syllabus_id", "n_input", "n_removed_logistics", "n_removed_no_learning",
                                             "n_kept"});
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    total += r.report;
    per_syllabus += csv::join_line({loaded.records[i].syllabus_id, std::to_string(r.report.n_input),
                                    std::to_string(r.report.n_removed_logistics),
                                    std::to_string(r.report.n_removed_no_learning), std::to_string(r.report.n_kept)});
    for (const auto& s : r.kept) {
      json j = {{"syllabus_id", s.syllabus_id}, {"index", s.index}, {"text", s.text}};
      lines += j.dump() + "\n";
    }
  }
  total.finalize();
  ctx.write("sentences.jsonl", lines);
  ctx.write("filter_report.json", report_json(total));
  ctx.write("filter_per_syllabus.csv", per_syllabus);
}

std::map<std::string, std::vector<Sentence>> read_sentences(const fs::path& path) {
  std::map<std::string, std::vector<Sentence>> out;
  std::ifstream in(path, std::ios::binary);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto j = json::parse(line);
      Sentence s;
      s.syllabus_id = j.at("syllabus_id").get<std::string>();
      s.index = j.at("index").get<std::size_t>();
      s.text = j.at("text").get<std::string>();
      s.normalized = normalize_text(s.text);
      out[s.syllabus_id].push_back(std::move(s));
    } catch (const json::exception& e) {
      throw Error(Errc::MalformedInput, path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<SkillVector> score_all(StepContext& ctx, const SkillTaxonomy& taxonomy, EmbeddingProvider& provider,
                                   const LoadedCorpus& corpus,
                                   const std::map<std::string, std::vector<Sentence>>& sentences) {
  const SkillScorer scorer(taxonomy, provider, ctx.cfg().provider.batch_size);
  std::vector<SkillVector> vectors(corpus.records.size());
  static const std::vector<Sentence> kNone;
  parallel_for(corpus.records.size(), ctx.cfg().jobs, [&](std::size_t i) {
    const auto& id = corpus.records[i].syllabus_id;
    auto it = sentences.find(id);
    vectors[i] = scorer.score(id, it == sentences.end() ? kNone : it->second);
  });
  return vectors;
}

std::string negative_csv(std::span<const SkillVector> vectors, const SkillTaxonomy& taxonomy) {
  std::string out = csv::join_line({"skill_id", "negative_fraction"});
  for (const auto& n : negative_value_report(vectors, taxonomy)) out += csv::join_line({n.skill_id, num(n.fraction)});
  return out;
}

std::string vectors_jsonl(std::span<const SkillVector> vectors) {
  std::string out;
  for (const auto& v : vectors) out += skill_vector_to_jsonl(v) + "\n";
  return out;
}

void step_score(StepContext& ctx) {
  const auto& cfg = ctx.cfg();
  const auto corpus = read_corpus(ctx);
  const auto dwa = read_taxonomy(ctx, "dwa_taxonomy", cfg.paths.dwa_taxonomy, TaxonomyKind::Dwa);
  const auto sentences = read_sentences(ctx.artifact("sentences.jsonl"));
  if (cfg.provider.kind == ProviderKind::Cache) ctx.input("embedding_cache", cfg.provider.endpoint_or_path);
  auto provider = std::make_shared<MemoEmbeddingProvider>(make_provider(cfg.provider));

  const auto dwa_vectors = score_all(ctx, dwa, *provider, corpus, sentences);
  ctx.write("dwa_vectors.jsonl", vectors_jsonl(dwa_vectors));
  ctx.write("dwa_negative_values.csv", negative_csv(dwa_vectors, dwa));
  if (cfg.paths.task_taxonomy) {
    const auto task = read_taxonomy(ctx, "task_taxonomy", *cfg.paths.task_taxonomy, TaxonomyKind::Task);
    const auto task_vectors = score_all(ctx, task, *provider, corpus, sentences);
    ctx.write("task_vectors.jsonl", vectors_jsonl(task_vectors));
    ctx.write("task_negative_values.csv", negative_csv(task_vectors, task));
  }
}

void step_train_abilities(StepContext& ctx) {
  const auto& cfg = ctx.cfg();
  const auto dwa = read_taxonomy(ctx, "dwa_taxonomy", cfg.paths.dwa_taxonomy, TaxonomyKind::Dwa);
  const auto profiles =
      load_occupation_dwa(ctx.input("occupation_dwa", cfg.paths.occupation_dwa), dwa, cfg.options.binary_dwa_profiles);
  const auto abilities = load_ability_importance(ctx.input("ability_importance", cfg.paths.ability_importance));
  const auto data = build_training(profiles, abilities);
  if (!data.unmatched_dwa_codes.empty()) {
    ctx.warn(std::to_string(data.unmatched_dwa_codes.size()) + " occupations have DWA rows but no ability rows");
  }
  if (!data.unmatched_ability_codes.empty()) {
    ctx.warn(std::to_string(data.unmatched_ability_codes.size()) + " occupations have ability rows but no DWA rows");
  }
  AbilityTrainingOptions opts;
  opts.grid = cfg.forest_grid;
  opts.folds = cfg.cv_folds;
  opts.master_seed = cfg.seed;
  opts.jobs = cfg.jobs;
  const auto set = train_ability_models(data, dwa, opts);
  ctx.write("ability_models.json", models_to_json(set));

  std::string cv = csv::join_line(
      {"ability_id", "n_trees", "max_depth", "min_samples_leaf", "features", "cv_mse", "oob_mse"});
  for (const auto& m : set.models) {
    cv += csv::join_line({m.ability_id, std::to_string(m.params.n_trees),
                          m.params.max_depth == 0 ? "" : std::to_string(m.params.max_depth),
                          std::to_string(m.params.min_samples_leaf), std::string(feature_rule_name(m.params.features)),
                          num(m.cv_mse), std::isnan(m.oob_mse) ? "" : num(m.oob_mse)});
  }
  ctx.write("ability_cv.csv", cv);
}

SkillTaxonomy ability_taxonomy_for(StepContext& ctx, const AbilityModelSet& set) {
  SkillTaxonomy t;
  t.kind = TaxonomyKind::Ability;
  if (ctx.cfg().paths.ability_taxonomy) {
    t = read_taxonomy(ctx, "ability_taxonomy", *ctx.cfg().paths.ability_taxonomy, TaxonomyKind::Ability);
    std::set<std::string> model_ids;
    for (const auto& m : set.models) model_ids.insert(m.ability_id);
    const auto ids = t.ids();
    if (std::set<std::string>(ids.begin(), ids.end()) != model_ids) {
      throw Error(Errc::TaxonomyMismatch, "ability models do not cover the ability taxonomy");
    }
    // model order is authoritative for vector layout
    std::map<std::string, std::string> text;
    for (const auto& e : t.entries) text[e.skill_id] = e.text;
    t.entries.clear();
    for (const auto& m : set.models) t.entries.push_back({m.ability_id, text[m.ability_id]});
    return t;
  }
  for (const auto& m : set.models) t.entries.push_back({m.ability_id, m.ability_id});
  return t;
}

void step_apply_abilities(StepContext& ctx) {
  const auto& cfg = ctx.cfg();
  const auto dwa = read_taxonomy(ctx, "dwa_taxonomy", cfg.paths.dwa_taxonomy, TaxonomyKind::Dwa);
  const auto set = models_from_json(read_file(ctx.artifact("ability_models.json")));
  (void)ability_taxonomy_for(ctx, set);
  const auto dwa_vectors = read_skill_vectors(ctx.artifact("dwa_vectors.jsonl"));
  require_uniform(dwa_vectors, TaxonomyKind::Dwa, dwa.size());
  const std::string fp = dwa.fingerprint();
  std::vector<SkillVector> out(dwa_vectors.size());
  parallel_for(dwa_vectors.size(), cfg.jobs, [&](std::size_t i) { out[i] = predict_abilities(dwa_vectors[i], set, fp); });
  ctx.write("ability_vectors.jsonl", vectors_jsonl(out));
}

std::string exceptions_csv(const AggregateResult& r) {
  std::string out = csv::join_line({"syllabus_id", "reason"});
  for (const auto& e : r.exceptions) out += csv::join_line({e.syllabus_id, e.reason});
  return out;
}

void step_aggregate(StepContext& ctx) {
  const auto& cfg = ctx.cfg();
  const auto corpus = read_corpus(ctx);
  const auto dwa = read_taxonomy(ctx, "dwa_taxonomy", cfg.paths.dwa_taxonomy, TaxonomyKind::Dwa);
  const auto dwa_vectors = read_skill_vectors(ctx.artifact("dwa_vectors.jsonl"));
  require_uniform(dwa_vectors, TaxonomyKind::Dwa, dwa.size());
  const auto result = aggregate(dwa_vectors, corpus.records);
  for (const auto& w : result.warnings) ctx.warn(w);
  ctx.write("institution_fos_year.csv", aggregate_metadata_csv(result.records));
  ctx.write("dwa_scores.csv", aggregate_scores_csv(result.records, dwa));
  ctx.write("aggregate_exceptions.csv", exceptions_csv(result));

  if (cfg.paths.task_taxonomy && ctx.has_artifact("task_vectors.jsonl")) {
    const auto task = read_taxonomy(ctx, "task_taxonomy", *cfg.paths.task_taxonomy, TaxonomyKind::Task);
    const auto vecs = read_skill_vectors(ctx.artifact("task_vectors.jsonl"));
    require_uniform(vecs, TaxonomyKind::Task, task.size());
    ctx.write("task_scores.csv", aggregate_scores_csv(aggregate(vecs, corpus.records).records, task));
  }
  if (ctx.has_artifact("ability_vectors.jsonl") && ctx.has_artifact("ability_models.json")) {
    const auto set = models_from_json(read_file(ctx.artifact("ability_models.json")));
    const auto abil = ability_taxonomy_for(ctx, set);
    const auto vecs = read_skill_vectors(ctx.artifact("ability_vectors.jsonl"));
    require_uniform(vecs, TaxonomyKind::Ability, abil.size());
    ctx.write("ability_scores.csv", aggregate_scores_csv(aggregate(vecs, corpus.records).records, abil));
  }
}

void step_dedup(StepContext& ctx) {
  const auto corpus = read_corpus(ctx);
  const auto vectors = read_skill_vectors(ctx.artifact("dwa_vectors.jsonl"));
  const auto report = dedup_report(vectors, corpus.records, ctx.cfg().options.dedup_decimals);
  if (report.n_skipped) ctx.warn(std::to_string(report.n_skipped) + " vectors lack a complete group key");
  ctx.write("dedup_report.json", dedup_report_to_json(report));
  ctx.write("dedup_per_fos.csv", dedup_per_fos_csv(report));
}

void step_rca(StepContext& ctx) {
  const auto dwa = read_taxonomy(ctx, "dwa_taxonomy", ctx.cfg().paths.dwa_taxonomy, TaxonomyKind::Dwa);
  const auto meta = ctx.artifact("institution_fos_year.csv");
  const auto scores = ctx.artifact("dwa_scores.csv");
  const auto records = read_aggregates(meta, scores, dwa);
  const auto mean = fos_matrix_from_aggregates(records, dwa);
  ctx.write("fos_dwa_mean.csv", fos_matrix_to_csv(mean));
  ctx.write("rca_dwa.csv", fos_matrix_to_csv(rca(mean)));
}

std::map<std::string, std::string> titles(const SkillTaxonomy& t) {
  std::map<std::string, std::string> out;
  for (const auto& e : t.entries) out[e.skill_id] = e.text;
  return out;
}

void step_mask(StepContext& ctx) {
  const auto& o = ctx.cfg().options;
  const auto dwa = read_taxonomy(ctx, "dwa_taxonomy", ctx.cfg().paths.dwa_taxonomy, TaxonomyKind::Dwa);
  const auto mean = fos_matrix_from_csv(ctx.artifact("fos_dwa_mean.csv"));
  const auto mask = mask_frequent(mean, {o.mask_top_n, o.mask_threshold});
  const auto names = titles(dwa);
  std::string out = csv::join_line({"skill_id", "title"});
  for (const auto& id : mask) {
    auto it = names.find(id);
    out += csv::join_line({id, it == names.end() ? "" : it->second});
  }
  ctx.write("masked_dwa.csv", out);
}

void step_topk(StepContext& ctx) {
  const auto& o = ctx.cfg().options;
  const auto dwa = read_taxonomy(ctx, "dwa_taxonomy", ctx.cfg().paths.dwa_taxonomy, TaxonomyKind::Dwa);
  const auto names = titles(dwa);
  const auto mean = fos_matrix_from_csv(ctx.artifact("fos_dwa_mean.csv"));
  const auto rca_m = fos_matrix_from_csv(ctx.artifact("rca_dwa.csv"));
  const auto mask_table = csv::read(ctx.artifact("masked_dwa.csv"), ',');
  std::set<std::string> mask;
  for (const auto& row : mask_table.rows) {
    if (!row.fields.empty()) mask.insert(row.fields[0]);
  }
  auto listing = [&](const FosSkillMatrix& m, const std::set<std::string>* skip, const std::string& value_col) {
    std::string out = csv::join_line({"field_name", "rank", "skill_id", "title", value_col});
    for (const auto& fos : m.fos_list) {
      std::size_t rank = 0;
      for (const auto& r : top_k(m, fos, o.top_k, skip)) {
        auto it = names.find(r.skill_id);
        out += csv::join_line(
            {fos, std::to_string(++rank), r.skill_id, it == names.end() ? "" : it->second, num(r.value)});
      }
    }
    return out;
  };
  ctx.write("top_dwa_per_fos.csv", listing(mean, &mask, "mean_score"));
  ctx.write("top_rca_per_fos.csv", listing(rca_m, nullptr, "rca"));
}

void step_distinctiveness(StepContext& ctx) {
  const auto rca_m = fos_matrix_from_csv(ctx.artifact("rca_dwa.csv"));
  const auto salary = load_salary_table(ctx.input("salary", ctx.cfg().paths.salary));
  std::string fits = csv::join_line({"percentile", "n", "slope", "intercept", "r_squared", "p_value"});
  std::string points = csv::join_line({"percentile", "field_name", "rca_percentile", "salary"});
  for (double p : ctx.cfg().options.rca_percentiles) {
    const auto r = distinctiveness_regression(rca_m, p, salary);
    fits += csv::join_line({num(p), std::to_string(r.fit.n), num(r.fit.slope), num(r.fit.intercept),
                            num(r.fit.r_squared), num(r.fit.p_value)});
    for (std::size_t i = 0; i < r.fos.size(); ++i) points += csv::join_line({num(p), r.fos[i], num(r.x[i]), num(r.y[i])});
  }
  ctx.write("distinctiveness.csv", fits);
  ctx.write("distinctiveness_points.csv", points);
}

void step_cluster(StepContext& ctx) {
  const auto mean = fos_matrix_from_csv(ctx.artifact("fos_dwa_mean.csv"));
  const auto sim = spearman_similarity(mean, ctx.cfg().jobs);
  for (const auto& w : sim.warnings) ctx.warn(w);
  ctx.write("similarity.csv", similarity_to_csv(sim));
  ctx.write("dendrogram.json", dendrogram_to_json(hierarchical_cluster(sim)));
}

void step_communities(StepContext& ctx) {
  const auto mean = fos_matrix_from_csv(ctx.artifact("fos_dwa_mean.csv"));
  const auto sim = spearman_similarity(mean, ctx.cfg().jobs);
  const auto part = louvain(sim, EdgeRule{ctx.cfg().options.community_min_similarity});
  ctx.write("communities.json", partition_to_json(part, sim.labels));
}

void step_kl(StepContext& ctx) {
  const auto& cfg = ctx.cfg();
  const auto corpus = read_corpus(ctx);
  const auto dwa = read_taxonomy(ctx, "dwa_taxonomy", cfg.paths.dwa_taxonomy, TaxonomyKind::Dwa);
  const auto vectors = read_skill_vectors(ctx.artifact("dwa_vectors.jsonl"));
  require_uniform(vectors, TaxonomyKind::Dwa, dwa.size());
  const auto profiles =
      load_occupation_dwa(ctx.input("occupation_dwa", cfg.paths.occupation_dwa), dwa, cfg.options.binary_dwa_profiles);
  const auto employment = load_employment_weights(ctx.input("employment", cfg.paths.employment));

  std::map<std::string, int> year_of;
  for (const auto& r : corpus.records) {
    if (r.year) year_of[r.syllabus_id] = *r.year;
  }
  std::map<int, std::vector<std::vector<double>>> by_year;
  for (const auto& v : vectors) {
    if (v.empty_content) continue;
    if (auto it = year_of.find(v.syllabus_id); it != year_of.end()) by_year[it->second].push_back(v.scores);
  }
  std::vector<NamedDistribution> syllabi;
  for (const auto& [year, vs] : by_year) {
    syllabi.push_back({"syllabi:" + std::to_string(year), syllabus_distribution(vs, cfg.options.kl_epsilon)});
  }
  std::vector<NamedDistribution> labor;
  for (const auto& [period, weights] : employment) {
    labor.push_back({period.empty() ? "labor" : "labor:" + period,
                     labor_profile(profiles, weights, cfg.options.occupation_filter, cfg.options.kl_epsilon)});
  }
  ctx.write("kl_grid.csv", kl_grid_to_csv(period_kl_matrix(syllabi, labor, cfg.jobs)));
}

void step_sufficiency(StepContext& ctx) {
  const auto& cfg = ctx.cfg();
  const auto corpus = read_corpus(ctx);
  const auto vectors = read_skill_vectors(ctx.artifact("dwa_vectors.jsonl"));
  std::map<std::string, const SyllabusRecord*> by_id;
  for (const auto& r : corpus.records) by_id[r.syllabus_id] = &r;
  std::map<GroupKey, std::vector<std::vector<double>>> groups;
  for (const auto& v : vectors) {
    auto it = by_id.find(v.syllabus_id);
    if (it == by_id.end()) continue;
    if (auto key = group_key(*it->second)) groups[*key].push_back(v.scores);
  }
  const std::size_t min_group = std::max<std::size_t>(cfg.options.sufficiency_min_group, 4);
  std::string out = csv::join_line({"group", "k", "metric", "mean", "ci_low", "ci_high", "elbow_k"});
  std::size_t used = 0;
  for (const auto& [key, group] : groups) {
    if (group.size() < min_group) continue;
    ++used;
    const std::string label = key.unit + "|" + key.field + "|" + std::to_string(key.year);
    const std::uint64_t seed = derive_seed(cfg.seed, std::stoull(sha256_hex(label).substr(0, 16), nullptr, 16));
    const auto curve = sufficiency_curve(group, cfg.options.sufficiency_trials, cfg.options.elbow_metric, seed, cfg.jobs);
    std::vector<std::pair<double, double>> pts;
    for (const auto& c : curve) pts.emplace_back(static_cast<double>(c.k), c.mean);
    const std::string elbow = std::to_string(elbow_detect(pts));
    for (const auto& c : curve) {
      out += csv::join_line({label, std::to_string(c.k), std::string(metric_name(cfg.options.elbow_metric)), num(c.mean),
                             num(c.ci_low), num(c.ci_high), elbow});
    }
  }
  if (used == 0) ctx.warn("no group has at least " + std::to_string(min_group) + " syllabi; sufficiency.csv is empty");
  ctx.write("sufficiency.csv", out);
}

using StepFn = void (*)(StepContext&);

const std::vector<std::pair<std::string, StepFn>>& steps() {
  static const std::vector<std::pair<std::string, StepFn>> list = {
      {"ingest-stats", step_ingest_stats},
      {"prep", step_prep},
      {"score", step_score},
      {"train-abilities", step_train_abilities},
      {"apply-abilities", step_apply_abilities},
      {"aggregate", step_aggregate},
      {"dedup", step_dedup},
      {"rca", step_rca},
      {"mask", step_mask},
      {"topk", step_topk},
      {"distinctiveness", step_distinctiveness},
      {"cluster", step_cluster},
      {"communities", step_communities},
      {"kl", step_kl},
      {"sufficiency", step_sufficiency},
  };
  return list;
}

}  // namespace

RunSummary run_subcommand(std::string_view subcommand, const PipelineConfig& cfg) {
  validate_config(cfg, subcommand);
  fs::create_directories(cfg.paths.output_dir / "manifests");
  RunSummary summary;
  for (const auto& [name, fn] : steps()) {
    if (subcommand != "all" && subcommand != name) continue;
    StepContext ctx(cfg, name, summary);
    fn(ctx);
    ctx.finish();
  }
  if (subcommand == "all") {
    json m;
    m["format"] = "skillatlas-manifest";
    m["subcommand"] = "all";
    m["version"] = library_version();
    m["config_sha256"] = sha256_hex(cfg.canonical_json());
    m["seed"] = cfg.seed;
    json outs = json::object();
    std::vector<std::string> names = summary.outputs;
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    for (const auto& n : names) outs[n] = sha256_file_hex(cfg.paths.output_dir / n);
    m["outputs"] = outs;
    write_file(cfg.paths.output_dir / "manifests" / "all.json", m.dump(2) + "\n");
  }
  return summary;
}

}  // namespace skillatlas
