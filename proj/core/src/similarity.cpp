#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <numeric>

#include "skillatlas/csv.hpp"
#include "skillatlas/error.hpp"
#include "skillatlas/structure.hpp"
#include "skillatlas/util.hpp"

namespace skillatlas {

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(Errc::LengthMismatch, "correlation of vectors with different lengths");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double spearman_rho(std::span<const double> a, std::span<const double> b) {
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  return pearson(ra, rb);
}

SimilarityMatrix spearman_similarity(const FosSkillMatrix& matrix, unsigned jobs) {
  if (matrix.n_skills() < 2) throw Error(Errc::TooFewPoints, "spearman similarity needs at least 2 skills per row");
  const std::size_t n = matrix.n_fos();
  SimilarityMatrix sim;
  sim.labels = matrix.fos_list;
  sim.values.assign(n * n, 0.0);
  std::vector<std::vector<double>> ranks(n);
  std::vector<bool> constant(n, false);
  for (std::size_t m = 0; m < n; ++m) {
    ranks[m] = average_ranks(matrix.row(m));
    const auto row = matrix.row(m);
    constant[m] = std::all_of(row.begin(), row.end(), [&](double v) { return v == row.front(); });
    if (constant[m]) sim.warnings.push_back("field '" + matrix.fos_list[m] + "' has a constant row; rho set to 0");
  }
  parallel_for(n, jobs, [&](std::size_t i) {
    sim.values[i * n + i] = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const std::size_t a = std::min(i, j);
      const std::size_t b = std::max(i, j);
      double rho = 0.0;
      if (!constant[a] && !constant[b]) rho = pearson(ranks[a], ranks[b]);
      sim.values[i * n + j] = rho;
    }
  });
  return sim;
}

std::string similarity_to_csv(const SimilarityMatrix& sim) {
  std::vector<std::string> header = {"field_name"};
  header.insert(header.end(), sim.labels.begin(), sim.labels.end());
  std::string out = csv::join_line(header);
  for (std::size_t i = 0; i < sim.size(); ++i) {
    std::vector<std::string> row = {sim.labels[i]};
    for (std::size_t j = 0; j < sim.size(); ++j) row.push_back(format_double(sim.at(i, j)));
    out += csv::join_line(row);
  }
  return out;
}

Dendrogram hierarchical_cluster(const SimilarityMatrix& sim) {
  const std::size_t n = sim.size();
  Dendrogram d;
  d.labels = sim.labels;
  if (n < 2) return d;

  // distances between active clusters, keyed by cluster id
  const std::size_t max_id = 2 * n - 1;
  std::vector<double> dist(max_id * max_id, 0.0);
  auto D = [&](std::size_t a, std::size_t b) -> double& { return dist[a * max_id + b]; };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) D(i, j) = std::max(0.0, 1.0 - sim.at(i, j));
  }
  std::vector<std::size_t> active(n);
  std::iota(active.begin(), active.end(), 0);
  std::vector<std::size_t> size(max_id, 1);

  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t best_a = 0;
    std::size_t best_b = 0;
    double best = std::numeric_limits<double>::infinity();
    // active stays sorted by id, so the first minimum is the smallest pair
    for (std::size_t x = 0; x < active.size(); ++x) {
      for (std::size_t y = x + 1; y < active.size(); ++y) {
        const double v = D(active[x], active[y]);
        if (v < best) {
          best = v;
          best_a = active[x];
          best_b = active[y];
        }
      }
    }
    const std::size_t merged = n + step;
    size[merged] = size[best_a] + size[best_b];
    for (std::size_t k : active) {
      if (k == best_a || k == best_b) continue;
      const double v = (static_cast<double>(size[best_a]) * D(best_a, k) + static_cast<double>(size[best_b]) * D(best_b, k)) /
                       static_cast<double>(size[merged]);
      D(merged, k) = v;
      D(k, merged) = v;
    }
    std::erase(active, best_a);
    std::erase(active, best_b);
    active.push_back(merged);
    d.merges.push_back({best_a, best_b, best, size[merged]});
  }
  return d;
}

std::vector<std::vector<std::size_t>> Dendrogram::cut(double height) const {
  const std::size_t n = labels.size();
  std::vector<std::size_t> parent(n + merges.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < merges.size(); ++i) {
    if (merges[i].height > height) continue;
    parent[find(merges[i].a)] = n + i;
    parent[find(merges[i].b)] = n + i;
  }
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t leaf = 0; leaf < n; ++leaf) groups[find(leaf)].push_back(leaf);
  std::vector<std::vector<std::size_t>> out;
  for (auto& [root, members] : groups) out.push_back(std::move(members));
  std::sort(out.begin(), out.end());
  return out;
}

std::string dendrogram_to_json(const Dendrogram& d) {
  nlohmann::ordered_json j;
  j["linkage"] = "average";
  j["distance"] = "1 - spearman";
  j["labels"] = d.labels;
  nlohmann::ordered_json merges = nlohmann::ordered_json::array();
  for (const auto& m : d.merges) {
    merges.push_back({{"a", m.a}, {"b", m.b}, {"height", m.height}, {"size", m.size}});
  }
  j["merges"] = std::move(merges);
  return j.dump(2) + "\n";
}

}  // namespace skillatlas
