#include "skillatlas/normalize.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <charconv>
#include <cmath>
#include <numeric>

#include "skillatlas/csv.hpp"
#include "skillatlas/error.hpp"
#include "skillatlas/util.hpp"

namespace skillatlas {

std::size_t FosSkillMatrix::fos_index(std::string_view fos) const {
  auto it = std::find(fos_list.begin(), fos_list.end(), fos);
  if (it == fos_list.end()) throw Error(Errc::UnknownFos, "unknown field of study '" + std::string(fos) + "'");
  return static_cast<std::size_t>(it - fos_list.begin());
}

FosSkillMatrix fos_matrix_from_aggregates(std::span<const AggregateRecord> records, const SkillTaxonomy& taxonomy) {
  std::map<std::string, std::vector<const AggregateRecord*>> by_fos;
  for (const auto& r : records) {
    if (r.mean_scores.size() != taxonomy.size()) {
      throw Error(Errc::TaxonomyMismatch, "aggregate record " + r.record_id + " does not match the taxonomy");
    }
    if (r.field_name) by_fos[*r.field_name].push_back(&r);
  }
  FosSkillMatrix m;
  m.skill_list = taxonomy.ids();
  std::vector<double> column;
  for (const auto& [fos, recs] : by_fos) {
    m.fos_list.push_back(fos);
    column.resize(recs.size());
    for (std::size_t s = 0; s < taxonomy.size(); ++s) {
      for (std::size_t i = 0; i < recs.size(); ++i) column[i] = recs[i]->mean_scores[s];
      m.values.push_back(pairwise_sum(column) / static_cast<double>(recs.size()));
    }
  }
  return m;
}

std::string fos_matrix_to_csv(const FosSkillMatrix& m) {
  std::vector<std::string> header = {"field_name"};
  header.insert(header.end(), m.skill_list.begin(), m.skill_list.end());
  std::string out = csv::join_line(header);
  std::vector<std::string> row;
  for (std::size_t i = 0; i < m.n_fos(); ++i) {
    row.assign(1, m.fos_list[i]);
    for (double v : m.row(i)) row.push_back(format_double(v));
    out += csv::join_line(row);
  }
  return out;
}

FosSkillMatrix fos_matrix_from_csv(const std::filesystem::path& path) {
  const auto t = csv::read(path, ',');
  if (t.header.size() < 2) throw Error(Errc::MalformedInput, path.string() + " has no skill columns");
  FosSkillMatrix m;
  m.skill_list.assign(t.header.begin() + 1, t.header.end());
  for (const auto& row : t.rows) {
    if (row.fields.size() != t.header.size()) {
      throw Error(Errc::MalformedInput, path.string() + " line " + std::to_string(row.line_no) + ": column count");
    }
    m.fos_list.push_back(row.fields[0]);
    for (std::size_t s = 1; s < row.fields.size(); ++s) {
      double v = 0.0;
      const auto& f = row.fields[s];
      auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc{} || p != f.data() + f.size()) {
        throw Error(Errc::MalformedInput, path.string() + " line " + std::to_string(row.line_no) + ": bad number");
      }
      m.values.push_back(v);
    }
  }
  return m;
}

FosSkillMatrix rca(const FosSkillMatrix& matrix) {
  const std::size_t M = matrix.n_fos();
  const std::size_t S = matrix.n_skills();
  if (matrix.values.size() != M * S) throw Error(Errc::LengthMismatch, "matrix shape does not match its labels");
  std::vector<double> clamped(matrix.values.size());
  std::transform(matrix.values.begin(), matrix.values.end(), clamped.begin(),
                 [](double v) { return std::max(v, 0.0); });

  std::vector<double> row_sum(M);
  std::vector<double> col_sum(S, 0.0);
  for (std::size_t m = 0; m < M; ++m) {
    std::span<const double> row(clamped.data() + m * S, S);
    row_sum[m] = pairwise_sum(row);
    if (!(row_sum[m] > 0.0)) {
      throw Error(Errc::ZeroRowSum, "field '" + matrix.fos_list[m] + "' has no positive skill mass");
    }
  }
  std::vector<double> col(M);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t m = 0; m < M; ++m) col[m] = clamped[m * S + s];
    col_sum[s] = pairwise_sum(col);
  }
  const double total = pairwise_sum(row_sum);

  FosSkillMatrix out;
  out.fos_list = matrix.fos_list;
  out.skill_list = matrix.skill_list;
  out.values.assign(M * S, 0.0);
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t s = 0; s < S; ++s) {
      if (col_sum[s] == 0.0) continue;
      out.values[m * S + s] = (clamped[m * S + s] / row_sum[m]) / (col_sum[s] / total);
    }
  }
  return out;
}

namespace {

// Skill indices of one row ordered by value descending, then skill id.
std::vector<std::size_t> ranked_indices(const FosSkillMatrix& matrix, std::size_t m) {
  std::vector<std::size_t> order(matrix.n_skills());
  std::iota(order.begin(), order.end(), 0);
  const auto row = matrix.row(m);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (row[a] != row[b]) return row[a] > row[b];
    return matrix.skill_list[a] < matrix.skill_list[b];
  });
  return order;
}

}  // namespace

std::set<std::string> mask_frequent(const FosSkillMatrix& matrix, const MaskOptions& options) {
  if (options.top_n > matrix.n_skills()) {
    throw Error(Errc::InvalidArgument, "top_n (" + std::to_string(options.top_n) + ") exceeds the number of skills (" +
                                           std::to_string(matrix.n_skills()) + ")");
  }
  std::vector<std::size_t> hits(matrix.n_skills(), 0);
  for (std::size_t m = 0; m < matrix.n_fos(); ++m) {
    const auto order = ranked_indices(matrix, m);
    for (std::size_t r = 0; r < options.top_n; ++r) ++hits[order[r]];
  }
  std::set<std::string> mask;
  if (matrix.n_fos() == 0) return mask;
  for (std::size_t s = 0; s < matrix.n_skills(); ++s) {
    if (static_cast<double>(hits[s]) / static_cast<double>(matrix.n_fos()) >= options.threshold) {
      mask.insert(matrix.skill_list[s]);
    }
  }
  return mask;
}

std::vector<RankedSkill> top_k(const FosSkillMatrix& matrix, std::string_view fos, std::size_t k,
                               const std::set<std::string>* mask) {
  const std::size_t m = matrix.fos_index(fos);
  std::vector<RankedSkill> out;
  if (k == 0) return out;
  for (std::size_t s : ranked_indices(matrix, m)) {
    if (mask && mask->contains(matrix.skill_list[s])) continue;
    out.push_back({matrix.skill_list[s], matrix.at(m, s)});
    if (out.size() == k) break;
  }
  return out;
}

RegressionResult ols(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(Errc::LengthMismatch, "x and y differ in length");
  const std::size_t n = x.size();
  if (n < 3) throw Error(Errc::TooFewPoints, "regression needs at least 3 points");
  const double nd = static_cast<double>(n);
  const double mx = pairwise_sum(x) / nd;
  const double my = pairwise_sum(y) / nd;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw Error(Errc::InvalidArgument, "regression predictor is constant");
  RegressionResult r;
  r.n = n;
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - (r.intercept + r.slope * x[i]);
    sse += e * e;
  }
  if (syy == 0.0) {
    r.slope = 0.0;
    r.intercept = my;
    r.r_squared = 0.0;
    r.p_value = 1.0;
    return r;
  }
  r.r_squared = std::clamp(1.0 - sse / syy, 0.0, 1.0);
  const double dof = nd - 2.0;
  r.slope_stderr = std::sqrt(sse / dof / sxx);
  if (r.slope_stderr == 0.0) {
    r.p_value = 0.0;
    return r;
  }
  const double t = r.slope / r.slope_stderr;
  boost::math::students_t dist(dof);
  r.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
  return r;
}

DistinctivenessResult distinctiveness_regression(const FosSkillMatrix& rca_matrix, double percentile,
                                                 const std::map<std::string, double>& salary) {
  if (!(percentile > 0.0 && percentile < 100.0)) {
    throw Error(Errc::InvalidArgument, "percentile must lie strictly between 0 and 100");
  }
  DistinctivenessResult res;
  std::vector<double> sorted;
  for (std::size_t m = 0; m < rca_matrix.n_fos(); ++m) {
    auto it = salary.find(rca_matrix.fos_list[m]);
    if (it == salary.end()) continue;
    const auto row = rca_matrix.row(m);
    sorted.assign(row.begin(), row.end());
    std::sort(sorted.begin(), sorted.end());
    res.fos.push_back(rca_matrix.fos_list[m]);
    res.x.push_back(percentile_sorted(sorted, percentile));
    res.y.push_back(it->second);
  }
  if (res.fos.size() < 3) {
    throw Error(Errc::TooFewPoints, "only " + std::to_string(res.fos.size()) + " fields have both RCA and salary");
  }
  res.fit = ols(res.x, res.y);
  return res;
}

std::map<std::string, double> load_salary_table(const std::filesystem::path& path) {
  const auto t = csv::read(path, ',');
  const auto name = t.find_column("field_name");
  const auto pay = t.find_column("median_annual_earnings_usd");
  if (!name || !pay) {
    throw Error(Errc::MalformedInput, path.string() + " needs field_name and median_annual_earnings_usd columns");
  }
  std::map<std::string, double> out;
  for (const auto& row : t.rows) {
    if (row.fields.size() <= std::max(*name, *pay)) {
      throw Error(Errc::MalformedInput, path.string() + " line " + std::to_string(row.line_no) + ": missing column");
    }
    const std::string_view f = trim(row.fields[*pay]);
    double v = 0.0;
    auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc{} || p != f.data() + f.size()) {
      throw Error(Errc::MalformedInput, path.string() + " line " + std::to_string(row.line_no) + ": bad earnings");
    }
    out[std::string(trim(row.fields[*name]))] = v;
  }
  return out;
}

}  // namespace skillatlas
