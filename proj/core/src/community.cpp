#include <algorithm>
#include <map>
#include <nlohmann/json.hpp>
#include <numeric>

#include "skillatlas/error.hpp"
#include "skillatlas/structure.hpp"

namespace skillatlas {

namespace {

constexpr double kMinGain = 1e-12;

// Renumbers ids to 0.. in order of first appearance.
std::vector<std::size_t> relabel(std::span<const std::size_t> ids) {
  std::map<std::size_t, std::size_t> remap;
  std::vector<std::size_t> out(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto [it, inserted] = remap.try_emplace(ids[i], remap.size());
    out[i] = it->second;
  }
  return out;
}

// One local-moving phase. Returns true if any node changed community.
bool move_nodes(const WeightedGraph& g, std::vector<std::size_t>& comm, double two_m) {
  const std::size_t n = g.n;
  std::vector<double> k(n, 0.0);
  std::vector<double> tot(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) k[i] += g.at(i, j);
    tot[comm[i]] += k[i];
  }
  bool changed = false;
  std::vector<double> links(n, 0.0);
  std::vector<std::size_t> touched;
  for (;;) {
    bool moved = false;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t own = comm[i];
      tot[own] -= k[i];
      touched.clear();
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i || g.at(i, j) == 0.0) continue;
        if (links[comm[j]] == 0.0) touched.push_back(comm[j]);
        links[comm[j]] += g.at(i, j);
      }
      auto gain = [&](std::size_t c) { return links[c] - tot[c] * k[i] / two_m; };
      std::size_t best = own;
      double best_gain = gain(own);
      std::sort(touched.begin(), touched.end());
      for (std::size_t c : touched) {
        if (c == own) continue;
        const double gc = gain(c);
        if ((gc - best_gain) / (0.5 * two_m) > kMinGain) {
          best = c;
          best_gain = gc;
        }
      }
      for (std::size_t c : touched) links[c] = 0.0;
      links[own] = 0.0;
      tot[best] += k[i];
      if (best != own) {
        comm[i] = best;
        moved = true;
        changed = true;
      }
    }
    if (!moved) break;
  }
  return changed;
}

WeightedGraph aggregate_graph(const WeightedGraph& g, std::span<const std::size_t> comm, std::size_t n_comm) {
  WeightedGraph out(n_comm);
  for (std::size_t i = 0; i < g.n; ++i) {
    for (std::size_t j = 0; j < g.n; ++j) out.w[comm[i] * n_comm + comm[j]] += g.at(i, j);
  }
  return out;
}

}  // namespace

void WeightedGraph::add_edge(std::size_t i, std::size_t j, double weight) {
  if (i >= n || j >= n) throw Error(Errc::InvalidArgument, "edge endpoint out of range");
  if (weight < 0.0) throw Error(Errc::InvalidArgument, "edge weights must be nonnegative");
  w[i * n + j] += weight;
  if (i != j) w[j * n + i] += weight;
}

double modularity(const WeightedGraph& g, std::span<const std::size_t> community) {
  if (community.size() != g.n) throw Error(Errc::LengthMismatch, "partition size differs from graph size");
  std::vector<double> k(g.n, 0.0);
  double two_m = 0.0;
  for (std::size_t i = 0; i < g.n; ++i) {
    for (std::size_t j = 0; j < g.n; ++j) k[i] += g.at(i, j);
    two_m += k[i];
  }
  if (two_m == 0.0) return 0.0;
  double q = 0.0;
  for (std::size_t i = 0; i < g.n; ++i) {
    for (std::size_t j = 0; j < g.n; ++j) {
      if (community[i] == community[j]) q += g.at(i, j) - k[i] * k[j] / two_m;
    }
  }
  return q / two_m;
}

Partition louvain(const WeightedGraph& g) {
  if (g.n == 0) throw Error(Errc::EmptyGraph, "community detection on a graph with no nodes");
  Partition p;
  p.community.resize(g.n);
  std::iota(p.community.begin(), p.community.end(), 0);
  const double two_m = std::accumulate(g.w.begin(), g.w.end(), 0.0);
  if (two_m == 0.0) return p;

  WeightedGraph level = g;
  for (;;) {
    std::vector<std::size_t> comm(level.n);
    std::iota(comm.begin(), comm.end(), 0);
    if (!move_nodes(level, comm, two_m)) break;
    comm = relabel(comm);
    const std::size_t n_comm = *std::max_element(comm.begin(), comm.end()) + 1;
    for (auto& c : p.community) c = comm[c];
    if (n_comm == level.n) break;
    level = aggregate_graph(level, comm, n_comm);
  }
  p.community = relabel(p.community);
  p.modularity = modularity(g, p.community);
  return p;
}

WeightedGraph similarity_graph(const SimilarityMatrix& sim, const EdgeRule& rule) {
  WeightedGraph g(sim.size());
  for (std::size_t i = 0; i < sim.size(); ++i) {
    for (std::size_t j = i + 1; j < sim.size(); ++j) {
      const double rho = sim.at(i, j);
      if (rho > rule.min_similarity && rho > 0.0) g.add_edge(i, j, rho);
    }
  }
  return g;
}

Partition louvain(const SimilarityMatrix& sim, const EdgeRule& rule) { return louvain(similarity_graph(sim, rule)); }

std::string partition_to_json(const Partition& p, std::span<const std::string> labels) {
  nlohmann::ordered_json j;
  j["modularity"] = p.modularity;
  j["n_communities"] = p.community.empty() ? 0 : *std::max_element(p.community.begin(), p.community.end()) + 1;
  nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < p.community.size(); ++i) {
    nodes.push_back({{"label", i < labels.size() ? labels[i] : std::to_string(i)}, {"community", p.community[i]}});
  }
  j["nodes"] = std::move(nodes);
  return j.dump(2) + "\n";
}

}  // namespace skillatlas
