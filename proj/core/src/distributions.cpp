#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <charconv>
#include <cmath>
#include <numeric>
#include <random>

#include "skillatlas/csv.hpp"
#include "skillatlas/error.hpp"
#include "skillatlas/structure.hpp"
#include "skillatlas/util.hpp"

namespace skillatlas {

namespace {

void require_distribution(std::span<const double> p, const char* name) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(Errc::InvalidArgument, std::string(name) + " has a negative or non-finite entry");
    }
    sum += v;
  }
  if (std::fabs(sum - 1.0) > 1e-9) throw Error(Errc::InvalidArgument, std::string(name) + " does not sum to 1");
}

double parse_number(const std::string& field, const std::filesystem::path& path, std::size_t line) {
  const std::string_view f = trim(field);
  double v = 0.0;
  auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (ec != std::errc{} || p != f.data() + f.size()) {
    throw Error(Errc::MalformedInput, path.string() + " line " + std::to_string(line) + ": bad number '" + field + "'");
  }
  return v;
}

}  // namespace

std::vector<double> smooth_distribution(std::span<const double> values, double epsilon) {
  if (values.empty()) throw Error(Errc::InvalidArgument, "cannot smooth an empty distribution");
  if (!(epsilon > 0.0)) throw Error(Errc::InvalidArgument, "smoothing epsilon must be positive");
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(), [](double v) { return std::max(v, 0.0); });
  // normalize, add epsilon, renormalize
  const double mass = pairwise_sum(out);
  if (mass > 0.0)
    for (double& v : out) v = v / mass;
  for (double& v : out) v += epsilon;
  const double total = pairwise_sum(out);
  for (double& v : out) v /= total;
  return out;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw Error(Errc::LengthMismatch,
                "distributions differ in length (" + std::to_string(p.size()) + " vs " + std::to_string(q.size()) + ")");
  }
  require_distribution(p, "P");
  require_distribution(q, "Q");
  std::vector<double> terms(p.size(), 0.0);
  for (std::size_t s = 0; s < p.size(); ++s) {
    if (p[s] == 0.0) continue;
    if (q[s] == 0.0) return std::numeric_limits<double>::infinity();
    terms[s] = p[s] * std::log(p[s] / q[s]);
  }
  return pairwise_sum(terms);
}

std::vector<double> labor_profile(const DwaProfiles& occupation_dwa, const std::map<std::string, double>& employment,
                                  std::span<const std::string> soc_prefixes, double epsilon) {
  if (soc_prefixes.empty()) throw Error(Errc::EmptyFilter, "occupation filter is empty");
  auto weight_of = [&](const std::string& soc) -> const double* {
    if (auto it = employment.find(soc); it != employment.end()) return &it->second;
    if (auto dot = soc.find('.'); dot != std::string::npos) {
      if (auto it = employment.find(soc.substr(0, dot)); it != employment.end()) return &it->second;
    }
    return nullptr;
  };
  std::vector<double> mix;
  std::size_t selected = 0;
  double total_weight = 0.0;
  for (const auto& [soc, row] : occupation_dwa) {
    const bool keep = std::any_of(soc_prefixes.begin(), soc_prefixes.end(),
                                  [&](const std::string& prefix) { return soc.starts_with(prefix); });
    if (!keep) continue;
    const double* w = weight_of(soc);
    if (!w) continue;
    if (*w < 0.0 || !std::isfinite(*w)) throw Error(Errc::InvalidArgument, "negative employment weight for " + soc);
    if (mix.empty()) mix.assign(row.size(), 0.0);
    if (row.size() != mix.size()) throw Error(Errc::LengthMismatch, "occupation " + soc + " has a different DWA count");
    for (std::size_t s = 0; s < row.size(); ++s) mix[s] += *w * row[s];
    total_weight += *w;
    ++selected;
  }
  if (selected == 0) throw Error(Errc::EmptyFilter, "no weighted occupation matches the filter");
  if (total_weight == 0.0) throw Error(Errc::ZeroWeight, "selected occupations have zero total employment");
  for (double& v : mix) v /= total_weight;
  return smooth_distribution(mix, epsilon);
}

std::vector<double> syllabus_distribution(std::span<const std::vector<double>> vectors, double epsilon) {
  if (vectors.empty()) throw Error(Errc::InvalidArgument, "no syllabus vectors for the period");
  const std::size_t dim = vectors.front().size();
  std::vector<double> mean(dim, 0.0);
  std::vector<double> column(vectors.size());
  for (std::size_t s = 0; s < dim; ++s) {
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      if (vectors[i].size() != dim) throw Error(Errc::LengthMismatch, "syllabus vectors differ in length");
      column[i] = std::max(vectors[i][s], 0.0);
    }
    mean[s] = pairwise_sum(column) / static_cast<double>(vectors.size());
  }
  return smooth_distribution(mean, epsilon);
}

std::map<std::string, std::map<std::string, double>> load_employment_weights(const std::filesystem::path& path) {
  const auto t = csv::read(path, ',');
  const auto soc = t.find_column({"soc_code", "OCC_CODE", "soc"});
  const auto emp = t.find_column({"employment", "TOT_EMP"});
  const auto period = t.find_column({"period", "year"});
  if (!soc || !emp) throw Error(Errc::MalformedInput, path.string() + " needs soc_code and employment columns");
  std::map<std::string, std::map<std::string, double>> out;
  for (const auto& row : t.rows) {
    const std::size_t need = std::max({*soc, *emp, period.value_or(0)});
    if (row.fields.size() <= need) {
      throw Error(Errc::MalformedInput, path.string() + " line " + std::to_string(row.line_no) + ": missing column");
    }
    const double w = parse_number(row.fields[*emp], path, row.line_no);
    if (w < 0.0) {
      throw Error(Errc::MalformedInput, path.string() + " line " + std::to_string(row.line_no) + ": negative employment");
    }
    const std::string key = period ? std::string(trim(row.fields[*period])) : std::string();
    out[key][std::string(trim(row.fields[*soc]))] += w;
  }
  return out;
}

KlGrid period_kl_matrix(std::span<const NamedDistribution> syllabi, std::span<const NamedDistribution> labor,
                        unsigned jobs) {
  if (syllabi.empty() || labor.empty()) {
    throw Error(Errc::InvalidArgument, "KL grid needs at least one syllabus period and one labor period");
  }
  std::vector<const NamedDistribution*> all;
  for (const auto& d : syllabi) all.push_back(&d);
  for (const auto& d : labor) all.push_back(&d);
  KlGrid grid;
  for (const auto* d : all) grid.labels.push_back(d->label);
  const std::size_t n = all.size();
  grid.values.assign(n * n, 0.0);
  parallel_for(n * n, jobs, [&](std::size_t cell) {
    grid.values[cell] = kl_divergence(all[cell / n]->p, all[cell % n]->p);
  });
  return grid;
}

std::string kl_grid_to_csv(const KlGrid& grid) {
  std::vector<std::string> header = {"period"};
  header.insert(header.end(), grid.labels.begin(), grid.labels.end());
  std::string out = csv::join_line(header);
  for (std::size_t i = 0; i < grid.labels.size(); ++i) {
    std::vector<std::string> row = {grid.labels[i]};
    for (std::size_t j = 0; j < grid.labels.size(); ++j) row.push_back(format_double(grid.at(i, j)));
    out += csv::join_line(row);
  }
  return out;
}

// ---- sufficiency ------------------------------------------------------------------

std::string_view metric_name(DistanceMetric m) noexcept {
  return m == DistanceMetric::Manhattan ? "manhattan" : "euclidean";
}

DistanceMetric parse_metric(std::string_view name) {
  const std::string lower = to_lower_ascii(name);
  if (lower == "manhattan") return DistanceMetric::Manhattan;
  if (lower == "euclidean") return DistanceMetric::Euclidean;
  throw ConfigError("options.elbow_metric", "unknown distance metric '" + std::string(name) + "'");
}

double distance(std::span<const double> a, std::span<const double> b, DistanceMetric metric) {
  if (a.size() != b.size()) throw Error(Errc::LengthMismatch, "vectors differ in length");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += metric == DistanceMetric::Manhattan ? std::fabs(d) : d * d;
  }
  return metric == DistanceMetric::Manhattan ? acc : std::sqrt(acc);
}

namespace {

// Means are computed as offsets from the first vector of the group.
std::vector<double> group_mean(std::span<const std::vector<double>> group) {
  const std::size_t dim = group.front().size();
  std::vector<double> mean(dim, 0.0);
  std::vector<double> column(group.size());
  for (std::size_t s = 0; s < dim; ++s) {
    const double ref = group.front()[s];
    for (std::size_t i = 0; i < group.size(); ++i) {
      if (group[i].size() != dim) throw Error(Errc::LengthMismatch, "group vectors differ in length");
      column[i] = group[i][s] - ref;
    }
    mean[s] = ref + pairwise_sum(column) / static_cast<double>(group.size());
  }
  return mean;
}

double one_trial(std::span<const std::vector<double>> group, std::span<const double> full_mean, std::size_t k,
                 DistanceMetric metric, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> idx(group.size());
  std::iota(idx.begin(), idx.end(), 0);
  // partial Fisher-Yates: the first k slots are a uniform sample
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
  const std::size_t dim = full_mean.size();
  std::vector<double> mean(dim, 0.0);
  std::vector<double> column(k);
  for (std::size_t s = 0; s < dim; ++s) {
    const double ref = group.front()[s];
    for (std::size_t i = 0; i < k; ++i) column[i] = group[idx[i]][s] - ref;
    mean[s] = ref + pairwise_sum(column) / static_cast<double>(k);
  }
  return distance(mean, full_mean, metric);
}

void check_group(std::span<const std::vector<double>> group, std::size_t trials) {
  if (group.size() < 2) {
    throw Error(Errc::GroupTooSmall, "sufficiency needs at least 2 syllabi, got " + std::to_string(group.size()));
  }
  if (trials == 0) throw Error(Errc::InvalidArgument, "trials must be positive");
}

std::uint64_t trial_seed(std::uint64_t seed, std::size_t k, std::size_t t) { return derive_seed(derive_seed(seed, k), t); }

}  // namespace

std::vector<double> sufficiency_trials(std::span<const std::vector<double>> group, std::size_t k, std::size_t trials,
                                       DistanceMetric metric, std::uint64_t seed) {
  check_group(group, trials);
  if (k == 0 || k >= group.size()) throw Error(Errc::InvalidArgument, "subset size must lie in 1..n-1");
  const auto full = group_mean(group);
  std::vector<double> out(trials);
  for (std::size_t t = 0; t < trials; ++t) out[t] = one_trial(group, full, k, metric, trial_seed(seed, k, t));
  return out;
}

CurvePoint summarize_trials(std::size_t k, std::span<const double> distances) {
  if (distances.empty()) throw Error(Errc::InvalidArgument, "no trial distances");
  CurvePoint p;
  p.k = k;
  const double n = static_cast<double>(distances.size());
  p.mean = pairwise_sum(distances) / n;
  p.ci_low = p.ci_high = p.mean;
  if (distances.size() < 2) return p;
  double ss = 0.0;
  for (double d : distances) ss += (d - p.mean) * (d - p.mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  const boost::math::students_t dist(n - 1.0);
  const double half = boost::math::quantile(dist, 0.975) * sd / std::sqrt(n);
  p.ci_low = p.mean - half;
  p.ci_high = p.mean + half;
  return p;
}

std::vector<CurvePoint> sufficiency_curve(std::span<const std::vector<double>> group, std::size_t trials,
                                          DistanceMetric metric, std::uint64_t seed, unsigned jobs) {
  check_group(group, trials);
  const auto full = group_mean(group);
  const std::size_t n_k = group.size() - 1;
  std::vector<double> dist(n_k * trials);
  parallel_for(dist.size(), jobs, [&](std::size_t cell) {
    const std::size_t k = cell / trials + 1;
    const std::size_t t = cell % trials;
    dist[cell] = one_trial(group, full, k, metric, trial_seed(seed, k, t));
  });
  std::vector<CurvePoint> curve;
  curve.reserve(n_k);
  for (std::size_t i = 0; i < n_k; ++i) {
    curve.push_back(summarize_trials(i + 1, std::span<const double>(dist).subspan(i * trials, trials)));
  }
  return curve;
}

std::size_t elbow_detect(std::span<const std::pair<double, double>> curve) {
  if (curve.size() < 3) throw Error(Errc::TooFewPoints, "elbow detection needs at least 3 points");
  for (std::size_t i = 1; i < curve.size(); ++i) {
    if (!(curve[i].first > curve[i - 1].first)) throw Error(Errc::InvalidArgument, "curve k values must ascend");
  }
  const auto [x0, y0] = curve.front();
  const auto [x1, y1] = curve.back();
  const double dx = x1 - x0;
  const double dy = y1 - y0;
  const double len = std::hypot(dx, dy);
  double scale = 1.0;
  for (const auto& [x, y] : curve) scale = std::max({scale, std::fabs(x), std::fabs(y)});
  const double tol = 1e-9 * scale;

  std::vector<double> d(curve.size(), 0.0);
  double best = 0.0;
  for (std::size_t i = 1; i + 1 < curve.size(); ++i) {
    d[i] = std::fabs(dy * (curve[i].first - x0) - dx * (curve[i].second - y0)) / len;
    best = std::max(best, d[i]);
  }
  for (std::size_t i = 1; i + 1 < curve.size(); ++i) {
    if (d[i] >= best - tol) return static_cast<std::size_t>(std::llround(curve[i].first));
  }
  return static_cast<std::size_t>(std::llround(curve[1].first));
}

}  // namespace skillatlas
