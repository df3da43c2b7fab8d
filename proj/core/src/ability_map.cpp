#include "skillatlas/ability_map.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <numeric>
#include <random>
#include <unordered_map>

#include "skillatlas/csv.hpp"
#include "skillatlas/error.hpp"
#include "skillatlas/util.hpp"

namespace skillatlas {

using nlohmann::json;

std::vector<double> Matrix::column(std::size_t c) const {
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) out[r] = at(r, c);
  return out;
}

Matrix Matrix::select_rows(std::span<const std::size_t> idx) const {
  Matrix m(idx.size(), cols);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(idx[i] * cols), cols,
                m.data.begin() + static_cast<std::ptrdiff_t>(i * cols));
  }
  return m;
}

// ---- loaders ------------------------------------------------------------------

namespace {

double parse_number(std::string_view s, const std::string& where) {
  s = trim(s);
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw Error(Errc::MalformedInput, "not a number '" + std::string(s) + "' at " + where);
  }
  return v;
}

std::string where(const std::filesystem::path& path, const csv::Row& row) {
  return path.string() + " line " + std::to_string(row.line_no);
}

const std::string& field(const csv::Row& row, std::size_t col, const std::filesystem::path& path) {
  if (col >= row.fields.size()) throw Error(Errc::MalformedInput, where(path, row) + ": missing column");
  return row.fields[col];
}

}  // namespace

DwaProfiles load_occupation_dwa(const std::filesystem::path& path, const SkillTaxonomy& dwa, bool binary) {
  const auto table = csv::read(path);
  const auto soc_col = table.find_column({"soc_code", "O*NET-SOC Code"});
  const auto dwa_col = table.find_column({"dwa_id", "DWA ID"});
  const auto val_col = table.find_column({"value", "Data Value"});
  if (!soc_col || !dwa_col) throw Error(Errc::MalformedInput, path.string() + " needs soc_code and dwa_id columns");
  if (!binary && !val_col) throw Error(Errc::MalformedInput, path.string() + " has no value column for graded input");

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < dwa.size(); ++i) index.emplace(dwa.entries[i].skill_id, i);

  DwaProfiles out;
  for (const auto& row : table.rows) {
    const std::string soc(trim(field(row, *soc_col, path)));
    auto it = index.find(std::string(trim(field(row, *dwa_col, path))));
    if (soc.empty() || it == index.end()) continue;
    auto& vec = out.try_emplace(soc, std::vector<double>(dwa.size(), 0.0)).first->second;
    const double v = binary ? 1.0 : parse_number(field(row, *val_col, path), where(path, row));
    vec[it->second] = std::max(vec[it->second], v);
  }
  return out;
}

AbilityTable load_ability_importance(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  const auto soc_col = table.find_column({"soc_code", "O*NET-SOC Code"});
  const auto ab_col = table.find_column({"ability_id", "Element ID"});
  const auto val_col = table.find_column({"importance", "Data Value"});
  const auto scale_col = table.find_column({"scale_id", "Scale ID"});
  if (!soc_col || !ab_col || !val_col) {
    throw Error(Errc::MalformedInput, path.string() + " needs soc_code, ability_id and importance columns");
  }
  AbilityTable out;
  for (const auto& row : table.rows) {
    if (scale_col && trim(field(row, *scale_col, path)) != "IM") continue;
    const std::string soc(trim(field(row, *soc_col, path)));
    const std::string ab(trim(field(row, *ab_col, path)));
    if (soc.empty() || ab.empty()) continue;
    const double v = parse_number(field(row, *val_col, path), where(path, row));
    if (std::find(out.ability_ids.begin(), out.ability_ids.end(), ab) == out.ability_ids.end()) {
      out.ability_ids.push_back(ab);
    }
    out.importance[soc][ab] = v;
  }
  return out;
}

TrainingSet build_training(const DwaProfiles& dwa_profiles, const AbilityTable& abilities) {
  TrainingSet ts;
  ts.ability_ids = abilities.ability_ids;
  std::size_t n_dwa = dwa_profiles.empty() ? 0 : dwa_profiles.begin()->second.size();
  for (const auto& [soc, row] : dwa_profiles) {
    auto it = abilities.importance.find(soc);
    if (it == abilities.importance.end()) {
      ts.unmatched_dwa_codes.push_back(soc);
      continue;
    }
    const bool complete = std::all_of(ts.ability_ids.begin(), ts.ability_ids.end(),
                                      [&](const std::string& a) { return it->second.contains(a); });
    if (!complete || row.size() != n_dwa) {
      ts.unmatched_dwa_codes.push_back(soc);
      continue;
    }
    ts.soc_codes.push_back(soc);
  }
  for (const auto& [soc, _] : abilities.importance) {
    if (!dwa_profiles.contains(soc)) ts.unmatched_ability_codes.push_back(soc);
  }
  if (ts.soc_codes.empty() || ts.ability_ids.empty()) {
    throw Error(Errc::EmptyJoin, "no occupation code appears in both the DWA and ability tables");
  }
  ts.X = Matrix(ts.soc_codes.size(), n_dwa);
  ts.Y = Matrix(ts.soc_codes.size(), ts.ability_ids.size());
  for (std::size_t r = 0; r < ts.soc_codes.size(); ++r) {
    const auto& xrow = dwa_profiles.at(ts.soc_codes[r]);
    std::copy(xrow.begin(), xrow.end(), ts.X.data.begin() + static_cast<std::ptrdiff_t>(r * n_dwa));
    const auto& imp = abilities.importance.at(ts.soc_codes[r]);
    for (std::size_t a = 0; a < ts.ability_ids.size(); ++a) ts.Y.at(r, a) = imp.at(ts.ability_ids[a]);
  }
  for (std::size_t a = 0; a < ts.Y.cols; ++a) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t r = 0; r < ts.Y.rows; ++r) {
      lo = std::min(lo, ts.Y.at(r, a));
      hi = std::max(hi, ts.Y.at(r, a));
    }
    for (std::size_t r = 0; r < ts.Y.rows; ++r) {
      ts.Y.at(r, a) = hi > lo ? (ts.Y.at(r, a) - lo) / (hi - lo) : 0.0;
    }
  }
  return ts;
}

// ---- trees --------------------------------------------------------------------

std::string_view feature_rule_name(FeatureRule r) noexcept {
  switch (r) {
    case FeatureRule::Sqrt: return "sqrt";
    case FeatureRule::Third: return "third";
    case FeatureRule::All: return "all";
  }
  return "sqrt";
}

FeatureRule parse_feature_rule(std::string_view name) {
  if (name == "sqrt") return FeatureRule::Sqrt;
  if (name == "third") return FeatureRule::Third;
  if (name == "all") return FeatureRule::All;
  throw Error(Errc::InvalidArgument, "unknown feature rule '" + std::string(name) + "'");
}

std::size_t features_per_split(FeatureRule rule, std::size_t n_features) noexcept {
  std::size_t k = n_features;
  switch (rule) {
    case FeatureRule::Sqrt: k = static_cast<std::size_t>(std::sqrt(static_cast<double>(n_features))); break;
    case FeatureRule::Third: k = n_features / 3; break;
    case FeatureRule::All: break;
  }
  return std::clamp<std::size_t>(k, 1, std::max<std::size_t>(n_features, 1));
}

std::vector<ForestParams> default_grid() {
  std::vector<ForestParams> grid;
  for (std::size_t n_trees : {100, 300}) {
    for (std::size_t depth : {8, 16, 0}) {
      for (std::size_t leaf : {1, 3}) {
        for (FeatureRule rule : {FeatureRule::Sqrt, FeatureRule::Third}) {
          grid.push_back({n_trees, depth, leaf, rule, true});
        }
      }
    }
  }
  return grid;
}

double RegressionTree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes[i].value;
}

std::size_t RegressionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (nodes[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const Node& n) { return n.feature < 0; }));
}

RegressionTree train_tree(const Matrix& X, std::span<const double> y, const ForestParams& params, std::uint64_t seed,
                          std::span<const std::size_t> rows) {
  if (y.size() != X.rows) throw Error(Errc::LengthMismatch, "X and y row counts differ");
  std::vector<std::size_t> idx;
  if (rows.empty()) {
    idx.resize(X.rows);
    std::iota(idx.begin(), idx.end(), 0);
  } else {
    idx.assign(rows.begin(), rows.end());
  }
  if (idx.size() < 2) throw Error(Errc::TooFewSamples, "a regression tree needs at least 2 samples");

  const std::size_t p = X.cols;
  const std::size_t k = p == 0 ? 0 : features_per_split(params.features, p);
  const std::size_t min_leaf = std::max<std::size_t>(params.min_samples_leaf, 1);
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> pool(p);
  std::iota(pool.begin(), pool.end(), 0);
  std::vector<std::size_t> chosen;
  std::vector<std::pair<double, double>> xy;

  RegressionTree tree;
  struct Task {
    std::size_t node, begin, end, depth;
  };
  std::vector<Task> stack;
  tree.nodes.emplace_back();
  stack.push_back({0, 0, idx.size(), 0});

  while (!stack.empty()) {
    const Task t = stack.back();
    stack.pop_back();
    const std::size_t n = t.end - t.begin;
    double sum = 0.0;
    double sumsq = 0.0;
    double ymin = std::numeric_limits<double>::infinity();
    double ymax = -ymin;
    for (std::size_t i = t.begin; i < t.end; ++i) {
      const double v = y[idx[i]];
      sum += v;
      sumsq += v * v;
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
    tree.nodes[t.node].value = ymin == ymax ? ymin : sum / static_cast<double>(n);

    const bool depth_done = params.max_depth != 0 && t.depth >= params.max_depth;
    if (depth_done || n < 2 * min_leaf || ymin == ymax || k == 0) continue;

    // draw k distinct features, then scan them in ascending index order
    for (std::size_t j = 0; j < k; ++j) {
      std::uniform_int_distribution<std::size_t> pick(j, p - 1);
      std::swap(pool[j], pool[pick(rng)]);
    }
    chosen.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(chosen.begin(), chosen.end());

    const double parent_sse = std::max(0.0, sumsq - sum * sum / static_cast<double>(n));
    double best_sse = std::numeric_limits<double>::infinity();
    int best_feature = -1;
    double best_threshold = 0.0;
    for (std::size_t f : chosen) {
      xy.clear();
      for (std::size_t i = t.begin; i < t.end; ++i) xy.emplace_back(X.at(idx[i], f), y[idx[i]]);
      std::sort(xy.begin(), xy.end());
      if (xy.front().first == xy.back().first) continue;
      double ls = 0.0;
      double ls2 = 0.0;
      for (std::size_t i = 1; i < n; ++i) {
        ls += xy[i - 1].second;
        ls2 += xy[i - 1].second * xy[i - 1].second;
        if (i < min_leaf || n - i < min_leaf || !(xy[i - 1].first < xy[i].first)) continue;
        const double nl = static_cast<double>(i);
        const double nr = static_cast<double>(n - i);
        const double rs = sum - ls;
        const double rs2 = sumsq - ls2;
        const double sse = std::max(0.0, ls2 - ls * ls / nl) + std::max(0.0, rs2 - rs * rs / nr);
        if (sse < best_sse) {
          best_sse = sse;
          best_feature = static_cast<int>(f);
          double thr = xy[i - 1].first + (xy[i].first - xy[i - 1].first) / 2.0;
          if (thr >= xy[i].first) thr = xy[i - 1].first;
          best_threshold = thr;
        }
      }
    }
    if (best_feature < 0 || !(best_sse < parent_sse)) continue;

    const auto f = static_cast<std::size_t>(best_feature);
    const auto mid = std::stable_partition(idx.begin() + static_cast<std::ptrdiff_t>(t.begin),
                                           idx.begin() + static_cast<std::ptrdiff_t>(t.end),
                                           [&](std::size_t r) { return X.at(r, f) <= best_threshold; });
    const auto split = static_cast<std::size_t>(mid - idx.begin());
    const auto left = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    auto& node = tree.nodes[t.node];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = left;
    node.right = left + 1;
    // right pushed first so the left subtree is expanded first
    stack.push_back({static_cast<std::size_t>(left + 1), split, t.end, t.depth + 1});
    stack.push_back({static_cast<std::size_t>(left), t.begin, split, t.depth + 1});
  }
  return tree;
}

// ---- forests ------------------------------------------------------------------

double ForestModel::predict(std::span<const double> x) const {
  if (trees.empty()) return 0.0;
  double s = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& t : trees) {
    const double v = t.predict(x);
    s += v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (lo == hi) return lo;
  return s / static_cast<double>(trees.size());
}

namespace {

ForestModel fit_forest(const Matrix& X, std::span<const double> y, std::span<const std::size_t> rows,
                       const ForestParams& params, std::uint64_t master_seed, unsigned jobs) {
  if (rows.size() < 2) throw Error(Errc::TooFewSamples, "a forest needs at least 2 samples");
  if (params.n_trees == 0) throw Error(Errc::InvalidArgument, "n_trees must be positive");
  ForestModel model;
  model.params = params;
  model.master_seed = master_seed;
  model.n_features = X.cols;
  model.trees.resize(params.n_trees);
  std::vector<std::vector<std::size_t>> samples(params.n_trees);

  parallel_for(params.n_trees, jobs, [&](std::size_t t) {
    const std::uint64_t tree_seed = derive_seed(master_seed, t);
    auto& sample = samples[t];
    if (params.bootstrap) {
      std::mt19937_64 rng(derive_seed(tree_seed, 1));
      std::uniform_int_distribution<std::size_t> pick(0, rows.size() - 1);
      sample.resize(rows.size());
      for (auto& s : sample) s = rows[pick(rng)];
    } else {
      sample.assign(rows.begin(), rows.end());
    }
    model.trees[t] = train_tree(X, y, params, derive_seed(tree_seed, 2), sample);
  });

  // out-of-bag diagnostics
  std::unordered_map<std::size_t, std::pair<double, std::size_t>> oob;
  for (std::size_t t = 0; t < params.n_trees && params.bootstrap; ++t) {
    std::vector<std::size_t> in_bag = samples[t];
    std::sort(in_bag.begin(), in_bag.end());
    for (std::size_t r : rows) {
      if (std::binary_search(in_bag.begin(), in_bag.end(), r)) continue;
      auto& acc = oob[r];
      acc.first += model.trees[t].predict(X.row(r));
      ++acc.second;
    }
  }
  double sq = 0.0;
  std::size_t counted = 0;
  for (std::size_t r : rows) {
    auto it = oob.find(r);
    if (it == oob.end()) continue;
    const double d = it->second.first / static_cast<double>(it->second.second) - y[r];
    sq += d * d;
    ++counted;
  }
  model.oob_mse = counted == 0 ? std::numeric_limits<double>::quiet_NaN() : sq / static_cast<double>(counted);
  return model;
}

}  // namespace

ForestModel train_forest(const Matrix& X, std::span<const double> y, const ForestParams& params,
                         std::uint64_t master_seed, unsigned jobs) {
  if (y.size() != X.rows) throw Error(Errc::LengthMismatch, "X and y row counts differ");
  std::vector<std::size_t> rows(X.rows);
  std::iota(rows.begin(), rows.end(), 0);
  return fit_forest(X, y, rows, params, master_seed, jobs);
}

std::vector<std::vector<std::size_t>> make_folds(std::size_t n, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw Error(Errc::InvalidArgument, "need at least 2 folds");
  if (n < folds) {
    throw Error(Errc::TooFewSamples, std::to_string(n) + " samples cannot fill " + std::to_string(folds) + " folds");
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::vector<std::size_t>> out(folds);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t size = n / folds + (f < n % folds ? 1 : 0);
    out[f].assign(perm.begin() + static_cast<std::ptrdiff_t>(pos), perm.begin() + static_cast<std::ptrdiff_t>(pos + size));
    pos += size;
  }
  return out;
}

ForestModel train_forest_cv(const Matrix& X, std::span<const double> y, std::span<const ForestParams> grid,
                            std::size_t folds, std::uint64_t master_seed, unsigned jobs, CvReport* report) {
  if (y.size() != X.rows) throw Error(Errc::LengthMismatch, "X and y row counts differ");
  if (grid.empty()) throw Error(Errc::InvalidArgument, "empty hyperparameter grid");
  const auto fold_rows = make_folds(X.rows, folds, derive_seed(master_seed, 0xF01D));

  CvReport rep;
  rep.cell_mse.assign(grid.size(), 0.0);
  for (std::size_t c = 0; c < grid.size(); ++c) {
    double total = 0.0;
    for (std::size_t f = 0; f < folds; ++f) {
      std::vector<std::size_t> train;
      for (std::size_t g = 0; g < folds; ++g) {
        if (g != f) train.insert(train.end(), fold_rows[g].begin(), fold_rows[g].end());
      }
      std::sort(train.begin(), train.end());
      const ForestModel m = fit_forest(X, y, train, grid[c], master_seed, jobs);
      double sq = 0.0;
      for (std::size_t r : fold_rows[f]) {
        const double d = m.predict(X.row(r)) - y[r];
        sq += d * d;
      }
      total += sq / static_cast<double>(fold_rows[f].size());
    }
    rep.cell_mse[c] = total / static_cast<double>(folds);
    if (rep.cell_mse[c] < rep.cell_mse[rep.best_cell]) rep.best_cell = c;
  }
  ForestModel best = train_forest(X, y, grid[rep.best_cell], master_seed, jobs);
  best.cv_mse = rep.cell_mse[rep.best_cell];
  if (report) *report = std::move(rep);
  return best;
}

AbilityModelSet train_ability_models(const TrainingSet& data, const SkillTaxonomy& dwa,
                                     const AbilityTrainingOptions& options) {
  if (data.X.cols != dwa.size()) {
    throw Error(Errc::TaxonomyMismatch, "training features (" + std::to_string(data.X.cols) +
                                            ") do not match the DWA taxonomy (" + std::to_string(dwa.size()) + ")");
  }
  AbilityModelSet set;
  set.taxonomy_fingerprint = dwa.fingerprint();
  set.n_features = dwa.size();
  set.models.resize(data.ability_ids.size());
  parallel_for(data.ability_ids.size(), options.jobs, [&](std::size_t a) {
    const auto y = data.Y.column(a);
    ForestModel m = train_forest_cv(data.X, y, options.grid, options.folds, derive_seed(options.master_seed, a), 1);
    m.ability_id = data.ability_ids[a];
    set.models[a] = std::move(m);
  });
  return set;
}

// ---- serialization ------------------------------------------------------------

namespace {

constexpr const char* kFormat = "skillatlas-ability-forest";
constexpr int kVersion = 1;

json params_to_json(const ForestParams& p) {
  json j;
  j["n_trees"] = p.n_trees;
  j["max_depth"] = p.max_depth == 0 ? json(nullptr) : json(p.max_depth);
  j["min_samples_leaf"] = p.min_samples_leaf;
  j["features_per_split"] = feature_rule_name(p.features);
  j["bootstrap"] = p.bootstrap;
  return j;
}

ForestParams params_from_json(const json& j) {
  ForestParams p;
  p.n_trees = j.at("n_trees").get<std::size_t>();
  p.max_depth = j.at("max_depth").is_null() ? 0 : j.at("max_depth").get<std::size_t>();
  p.min_samples_leaf = j.at("min_samples_leaf").get<std::size_t>();
  p.features = parse_feature_rule(j.at("features_per_split").get<std::string>());
  p.bootstrap = j.at("bootstrap").get<bool>();
  return p;
}

}  // namespace

std::string models_to_json(const AbilityModelSet& set) {
  json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["taxonomy_fingerprint"] = set.taxonomy_fingerprint;
  j["n_features"] = set.n_features;
  json models = json::array();
  for (const auto& m : set.models) {
    json jm;
    jm["ability_id"] = m.ability_id;
    jm["hyperparams"] = params_to_json(m.params);
    jm["master_seed"] = m.master_seed;
    jm["cv_mse"] = m.cv_mse;
    jm["oob_mse"] = std::isnan(m.oob_mse) ? json(nullptr) : json(m.oob_mse);
    json trees = json::array();
    for (const auto& t : m.trees) {
      json jt;
      std::vector<int> feature;
      std::vector<double> threshold;
      std::vector<std::int32_t> left;
      std::vector<std::int32_t> right;
      std::vector<double> value;
      for (const auto& n : t.nodes) {
        feature.push_back(n.feature);
        threshold.push_back(n.threshold);
        left.push_back(n.left);
        right.push_back(n.right);
        value.push_back(n.value);
      }
      jt["feature"] = feature;
      jt["threshold"] = threshold;
      jt["left"] = left;
      jt["right"] = right;
      jt["value"] = value;
      trees.push_back(std::move(jt));
    }
    jm["trees"] = std::move(trees);
    models.push_back(std::move(jm));
  }
  j["models"] = std::move(models);
  return j.dump() + "\n";
}

AbilityModelSet models_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    if (j.at("format").get<std::string>() != kFormat) throw Error(Errc::MalformedInput, "not an ability model file");
    if (j.at("version").get<int>() != kVersion) {
      throw Error(Errc::MalformedInput, "unsupported model version " + std::to_string(j.at("version").get<int>()));
    }
    AbilityModelSet set;
    set.taxonomy_fingerprint = j.at("taxonomy_fingerprint").get<std::string>();
    set.n_features = j.at("n_features").get<std::size_t>();
    for (const auto& jm : j.at("models")) {
      ForestModel m;
      m.ability_id = jm.at("ability_id").get<std::string>();
      m.params = params_from_json(jm.at("hyperparams"));
      m.master_seed = jm.at("master_seed").get<std::uint64_t>();
      m.cv_mse = jm.at("cv_mse").get<double>();
      m.oob_mse = jm.at("oob_mse").is_null() ? std::numeric_limits<double>::quiet_NaN() : jm.at("oob_mse").get<double>();
      m.n_features = set.n_features;
      for (const auto& jt : jm.at("trees")) {
        const auto feature = jt.at("feature").get<std::vector<int>>();
        const auto threshold = jt.at("threshold").get<std::vector<double>>();
        const auto left = jt.at("left").get<std::vector<std::int32_t>>();
        const auto right = jt.at("right").get<std::vector<std::int32_t>>();
        const auto value = jt.at("value").get<std::vector<double>>();
        const std::size_t n = feature.size();
        if (threshold.size() != n || left.size() != n || right.size() != n || value.size() != n || n == 0) {
          throw Error(Errc::MalformedInput, "tree arrays differ in length");
        }
        RegressionTree t;
        t.nodes.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
          auto& node = t.nodes[i];
          node = {feature[i], threshold[i], left[i], right[i], value[i]};
          if (node.feature >= 0) {
            const bool ok = static_cast<std::size_t>(node.feature) < set.n_features && node.left > 0 &&
                            node.right > 0 && static_cast<std::size_t>(node.left) < n &&
                            static_cast<std::size_t>(node.right) < n;
            if (!ok) throw Error(Errc::MalformedInput, "tree node " + std::to_string(i) + " is out of range");
          }
        }
        m.trees.push_back(std::move(t));
      }
      set.models.push_back(std::move(m));
    }
    return set;
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(Errc::MalformedInput, std::string("bad ability model file: ") + e.what());
  }
}

SkillVector predict_abilities(const SkillVector& dwa_vector, const AbilityModelSet& models,
                              const std::string& dwa_fingerprint) {
  if (dwa_vector.kind != TaxonomyKind::Dwa) {
    throw Error(Errc::TaxonomyMismatch, "ability mapping needs a DWA vector");
  }
  if (dwa_vector.scores.size() != models.n_features) {
    throw Error(Errc::TaxonomyMismatch, "DWA vector has " + std::to_string(dwa_vector.scores.size()) +
                                            " scores, models expect " + std::to_string(models.n_features));
  }
  if (!dwa_fingerprint.empty() && dwa_fingerprint != models.taxonomy_fingerprint) {
    throw Error(Errc::TaxonomyMismatch, "DWA taxonomy differs from the one the models were trained on");
  }
  SkillVector out;
  out.syllabus_id = dwa_vector.syllabus_id;
  out.kind = TaxonomyKind::Ability;
  out.empty_content = dwa_vector.empty_content;
  out.scores.assign(models.models.size(), 0.0);
  if (dwa_vector.empty_content) return out;
  for (std::size_t a = 0; a < models.models.size(); ++a) out.scores[a] = models.models[a].predict(dwa_vector.scores);
  return out;
}

}  // namespace skillatlas
