#pragma once

#include "spikebci/signal_io.hpp"
#include "spikebci/types.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace spikebci {

struct ClusterAssignment {
  std::vector<std::size_t> assignment;  // channel index -> cluster in [0, n_clusters)
  std::vector<Vec3> centroids;
  double wcss{0.0};
  std::size_t n_clusters{0};

  // k-means diagnostics: objective after every assignment/update half-step
  // and the number of Lloyd iterations run.
  std::vector<double> wcss_history;
  std::size_t iterations{0};

  // Fixed maps only: original (file) label of each compacted cluster index.
  std::vector<int> label_remap;

  // Channel indices of each cluster, ascending.
  std::vector<std::vector<std::size_t>> members() const;
  std::vector<std::size_t> sizes() const;
};

struct KMeansOptions {
  std::size_t max_iterations{300};
  // Independent starts; the lowest-wcss run wins (earliest on ties). Start 0
  // is farthest-point from the first centre drawn from `seed`, the next n - 1
  // are farthest-point from every other point, the rest are random k-subsets.
  std::size_t restarts{64};
};

// Lloyd's algorithm with seeded greedy farthest-point initialisation. At each
// Lloyd fixed point a Hartigan single-point transfer pass runs; Lloyd resumes
// if it moved anything, so the result is both nearest-centroid consistent and
// transfer-stable.
// Throws ParameterError if k == 0, k > positions.size() or a coordinate is
// not finite.
ClusterAssignment kmeans(std::span<const Vec3> positions, std::size_t k, std::uint64_t seed,
                         const KMeansOptions& options = {});

double compute_wcss(std::span<const Vec3> positions, std::span<const std::size_t> assignment,
                    std::span<const Vec3> centroids);

// Cluster means of an assignment; clusters with no members get the origin.
std::vector<Vec3> cluster_means(std::span<const Vec3> positions, std::span<const std::size_t> assignment,
                                std::size_t k);

struct ElbowResult {
  std::size_t selected_k{1};
  std::vector<double> wcss;  // wcss[i] is the objective for k = i + 1
};

// Knee of a decreasing curve: the k whose normalised (k, wcss) point lies
// farthest from the chord between the first and last points. Ties go to the
// smaller k.
std::size_t chord_knee(std::span<const double> wcss);

// Runs kmeans for k = 1..k_max (seed derived per k) and picks the knee.
ElbowResult elbow_select(std::span<const Vec3> positions, std::size_t k_max, std::uint64_t seed,
                         const KMeansOptions& options = {});

// Assignment taken verbatim from the layout's cluster map, labels compacted
// to 0..n-1 in ascending label order.
ClusterAssignment fixed_assignment(const ElectrodeLayout& layout);

// Smallest cluster size a kernel bank accepts.
inline constexpr std::size_t kMinClusterSize = 3;

bool is_feasible(const ClusterAssignment& clusters, std::size_t min_size = kMinClusterSize);

}  // namespace spikebci
