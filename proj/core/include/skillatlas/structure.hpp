#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "skillatlas/ability_map.hpp"
#include "skillatlas/normalize.hpp"

namespace skillatlas {

// ---- similarity -----------------------------------------------------------------

struct SimilarityMatrix {
  std::vector<std::string> labels;
  std::vector<double> values;  // n x n, row-major
  std::vector<std::string> warnings;

  std::size_t size() const noexcept { return labels.size(); }
  double at(std::size_t i, std::size_t j) const { return values[i * labels.size() + j]; }
};

/// Ranks starting at 1; tied values share the mean of their ranks.
std::vector<double> average_ranks(std::span<const double> values);
double pearson(std::span<const double> a, std::span<const double> b);
double spearman_rho(std::span<const double> a, std::span<const double> b);

/// Pairwise Spearman correlation between field rows. A constant row has
/// undefined rho; it is recorded as 0 (diagonal stays 1) with a warning.
SimilarityMatrix spearman_similarity(const FosSkillMatrix& matrix, unsigned jobs = 1);
std::string similarity_to_csv(const SimilarityMatrix& sim);

// ---- hierarchical clustering -------------------------------------------------------

/// Clusters 0..n-1 are the leaves; the i-th merge creates cluster n + i.
struct Dendrogram {
  struct Merge {
    std::size_t a = 0;
    std::size_t b = 0;
    double height = 0.0;
    std::size_t size = 0;
  };
  std::vector<std::string> labels;
  std::vector<Merge> merges;

  /// Leaf labels grouped by cutting every merge above `height`.
  std::vector<std::vector<std::size_t>> cut(double height) const;
};

/// Average-linkage agglomeration on d = 1 - rho. Ties go to the smallest
/// (a, b) cluster-id pair.
Dendrogram hierarchical_cluster(const SimilarityMatrix& sim);
std::string dendrogram_to_json(const Dendrogram& d);

// ---- community detection -------------------------------------------------------------

/// Dense symmetric weighted graph.
struct WeightedGraph {
  std::size_t n = 0;
  std::vector<double> w;  // n x n

  explicit WeightedGraph(std::size_t nodes = 0) : n(nodes), w(nodes * nodes, 0.0) {}
  double at(std::size_t i, std::size_t j) const { return w[i * n + j]; }
  void add_edge(std::size_t i, std::size_t j, double weight);
};

struct Partition {
  std::vector<std::size_t> community;  // node -> id, ids contiguous from 0
  double modularity = 0.0;
};

/// Newman modularity at resolution 1.
double modularity(const WeightedGraph& g, std::span<const std::size_t> community);

/// Two-phase Louvain: local moves in node-index order until no move gains
/// more than 1e-12, then aggregation, repeated until stable.
Partition louvain(const WeightedGraph& g);

struct EdgeRule {
  double min_similarity = 0.0;  // keep edges with rho > min_similarity, weight rho
};

WeightedGraph similarity_graph(const SimilarityMatrix& sim, const EdgeRule& rule = {});
Partition louvain(const SimilarityMatrix& sim, const EdgeRule& rule = {});
std::string partition_to_json(const Partition& p, std::span<const std::string> labels);

// ---- distributions ----------------------------------------------------------------

inline constexpr double kDefaultKlEpsilon = 1e-9;

/// Clamp negatives to 0, add epsilon to every cell, normalize to sum 1.
std::vector<double> smooth_distribution(std::span<const double> values, double epsilon = kDefaultKlEpsilon);

/// sum P(s) ln(P(s)/Q(s)). Throws LengthMismatch; both inputs must be
/// normalized (within 1e-9).
double kl_divergence(std::span<const double> p, std::span<const double> q);

/// Employment-weighted DWA mix of the occupations whose code starts with any
/// of `soc_prefixes` (an empty prefix selects all), smoothed and normalized.
/// Weights are looked up by the full code, then by the code before '.'.
std::vector<double> labor_profile(const DwaProfiles& occupation_dwa, const std::map<std::string, double>& employment,
                                  std::span<const std::string> soc_prefixes, double epsilon = kDefaultKlEpsilon);

/// Mean of clamped score vectors, smoothed and normalized.
std::vector<double> syllabus_distribution(std::span<const std::vector<double>> vectors,
                                          double epsilon = kDefaultKlEpsilon);

/// employment[period][soc]; the period column is optional ("" when absent).
std::map<std::string, std::map<std::string, double>> load_employment_weights(const std::filesystem::path& path);

struct NamedDistribution {
  std::string label;
  std::vector<double> p;
};

struct KlGrid {
  std::vector<std::string> labels;
  std::vector<double> values;  // KL(row || column)

  double at(std::size_t i, std::size_t j) const { return values[i * labels.size() + j]; }
};

/// Full pairwise grid over syllabus periods followed by labor periods.
KlGrid period_kl_matrix(std::span<const NamedDistribution> syllabi, std::span<const NamedDistribution> labor,
                        unsigned jobs = 1);
std::string kl_grid_to_csv(const KlGrid& grid);

// ---- sufficiency ------------------------------------------------------------------

enum class DistanceMetric { Manhattan, Euclidean };
std::string_view metric_name(DistanceMetric m) noexcept;
DistanceMetric parse_metric(std::string_view name);
double distance(std::span<const double> a, std::span<const double> b, DistanceMetric metric);

struct CurvePoint {
  std::size_t k = 0;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// For each subset size k in 1..n-1, draws `trials` subsets without
/// replacement, averages them, and measures the distance to the full-group
/// mean. CI is the 95% Student-t interval over trials.
std::vector<CurvePoint> sufficiency_curve(std::span<const std::vector<double>> group, std::size_t trials,
                                          DistanceMetric metric, std::uint64_t seed, unsigned jobs = 1);

/// Per-trial distances for one k (exposed for pooling across groups).
std::vector<double> sufficiency_trials(std::span<const std::vector<double>> group, std::size_t k, std::size_t trials,
                                       DistanceMetric metric, std::uint64_t seed);

CurvePoint summarize_trials(std::size_t k, std::span<const double> distances);

/// Knee of a curve: the interior point farthest from the chord between the
/// first and last points; ties go to the smallest k.
std::size_t elbow_detect(std::span<const std::pair<double, double>> curve);

}  // namespace skillatlas
