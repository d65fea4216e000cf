#include "spikebci/spatial_clustering.hpp"

#include "spikebci/errors.hpp"
#include "spikebci/rng.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>

namespace spikebci {

std::vector<std::vector<std::size_t>> ClusterAssignment::members() const {
  std::vector<std::vector<std::size_t>> out(n_clusters);
  for (std::size_t i = 0; i < assignment.size(); ++i) out[assignment[i]].push_back(i);
  return out;
}

std::vector<std::size_t> ClusterAssignment::sizes() const {
  std::vector<std::size_t> out(n_clusters, 0);
  for (std::size_t c : assignment) ++out[c];
  return out;
}

double compute_wcss(std::span<const Vec3> positions, std::span<const std::size_t> assignment,
                    std::span<const Vec3> centroids) {
  double total = 0.0;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    total += squared_distance(positions[i], centroids[assignment[i]]);
  }
  return total;
}

std::vector<Vec3> cluster_means(std::span<const Vec3> positions, std::span<const std::size_t> assignment,
                                std::size_t k) {
  std::vector<Vec3> sums(k);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    Vec3& s = sums[assignment[i]];
    s.x += positions[i].x;
    s.y += positions[i].y;
    s.z += positions[i].z;
    ++counts[assignment[i]];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) continue;
    const auto n = static_cast<double>(counts[c]);
    sums[c] = {sums[c].x / n, sums[c].y / n, sums[c].z / n};
  }
  return sums;
}

namespace {

std::size_t nearest(const Vec3& p, std::span<const Vec3> centroids) {
  std::size_t best = 0;
  double best_d = squared_distance(p, centroids[0]);
  for (std::size_t c = 1; c < centroids.size(); ++c) {
    const double d = squared_distance(p, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

std::vector<std::size_t> assign_nearest(std::span<const Vec3> positions, std::span<const Vec3> centroids) {
  std::vector<std::size_t> out(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) out[i] = nearest(positions[i], centroids);
  return out;
}

std::vector<Vec3> farthest_point_init(std::span<const Vec3> positions, std::size_t k, std::size_t first) {
  std::vector<Vec3> centres{positions[first]};
  std::vector<double> dist(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) dist[i] = squared_distance(positions[i], centres[0]);
  while (centres.size() < k) {
    std::size_t pick = 0;
    for (std::size_t i = 1; i < positions.size(); ++i) {
      if (dist[i] > dist[pick]) pick = i;
    }
    centres.push_back(positions[pick]);
    for (std::size_t i = 0; i < positions.size(); ++i) {
      dist[i] = std::min(dist[i], squared_distance(positions[i], positions[pick]));
    }
  }
  return centres;
}

// Moves the point farthest from its centroid (among clusters that can spare
// one) into each empty cluster, then recomputes the means.
void repair_empty(std::span<const Vec3> positions, std::vector<std::size_t>& assignment,
                  std::vector<Vec3>& centroids) {
  const std::size_t k = centroids.size();
  while (true) {
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t c : assignment) ++counts[c];
    const auto empty = std::find(counts.begin(), counts.end(), std::size_t{0});
    if (empty == counts.end()) return;
    std::size_t pick = positions.size();
    double pick_d = -1.0;
    for (std::size_t i = 0; i < positions.size(); ++i) {
      if (counts[assignment[i]] < 2) continue;
      const double d = squared_distance(positions[i], centroids[assignment[i]]);
      if (d > pick_d) {
        pick_d = d;
        pick = i;
      }
    }
    assert(pick < positions.size());
    assignment[pick] = static_cast<std::size_t>(empty - counts.begin());
    centroids = cluster_means(positions, assignment, k);
  }
}

// Moves single points between clusters while a move lowers the objective,
// accounting for the centroid shift: moving p from a (size n_a) to b (size
// n_b) changes WCSS by n_b/(n_b+1)|p-c_b|^2 - n_a/(n_a-1)|p-c_a|^2.
// Returns whether any point moved; centroids are kept exact means.
bool hartigan_pass(std::span<const Vec3> positions, std::vector<std::size_t>& assignment,
                   std::vector<Vec3>& centroids) {
  const std::size_t k = centroids.size();
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t c : assignment) ++counts[c];
  bool moved_any = false;
  bool moved = true;
  while (moved) {
    moved = false;
    for (std::size_t i = 0; i < positions.size(); ++i) {
      const std::size_t a = assignment[i];
      if (counts[a] < 2) continue;
      const double na = static_cast<double>(counts[a]);
      const double removal = na / (na - 1.0) * squared_distance(positions[i], centroids[a]);
      std::size_t best = a;
      double best_gain = 0.0;
      for (std::size_t b = 0; b < k; ++b) {
        if (b == a) continue;
        const double nb = static_cast<double>(counts[b]);
        const double gain = removal - nb / (nb + 1.0) * squared_distance(positions[i], centroids[b]);
        if (gain > best_gain * (1.0 + 1e-12) + 1e-12 * removal) {
          best_gain = gain;
          best = b;
        }
      }
      if (best == a) continue;
      assignment[i] = best;
      --counts[a];
      ++counts[best];
      centroids = cluster_means(positions, assignment, k);
      moved = moved_any = true;
    }
  }
  return moved_any;
}

ClusterAssignment lloyd(std::span<const Vec3> positions, std::vector<Vec3> initial,
                        std::size_t max_iterations) {
  const std::size_t k = initial.size();
  ClusterAssignment out;
  out.n_clusters = k;
  out.centroids = std::move(initial);
  out.assignment = assign_nearest(positions, out.centroids);

  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    out.iterations = iter + 1;
    out.centroids = cluster_means(positions, out.assignment, k);
    repair_empty(positions, out.assignment, out.centroids);
    out.wcss_history.push_back(compute_wcss(positions, out.assignment, out.centroids));

    auto next = assign_nearest(positions, out.centroids);
    const bool converged = next == out.assignment;
    out.assignment = std::move(next);
    out.wcss_history.push_back(compute_wcss(positions, out.assignment, out.centroids));
#ifndef NDEBUG
    const auto& h = out.wcss_history;
    for (std::size_t i = 1; i < h.size(); ++i) {
      assert(h[i] <= h[i - 1] * (1.0 + 1e-12) + 1e-300);
    }
#endif
    if (converged) {
      // Lloyd fixed point; try single-point transfers, which can still lower
      // the objective, and resume Lloyd if one was made.
      if (!hartigan_pass(positions, out.assignment, out.centroids)) break;
      out.wcss_history.push_back(compute_wcss(positions, out.assignment, out.centroids));
      out.assignment = assign_nearest(positions, out.centroids);
      out.wcss_history.push_back(compute_wcss(positions, out.assignment, out.centroids));
    }
  }
  // A capped run can end on an assignment that left a cluster empty.
  if (std::ranges::any_of(out.sizes(), [](std::size_t n) { return n == 0; })) {
    out.centroids = cluster_means(positions, out.assignment, k);
    repair_empty(positions, out.assignment, out.centroids);
  }
  out.wcss = compute_wcss(positions, out.assignment, out.centroids);
  return out;
}

}  // namespace

ClusterAssignment kmeans(std::span<const Vec3> positions, std::size_t k, std::uint64_t seed,
                         const KMeansOptions& options) {
  if (k == 0) throw ParameterError("kmeans: k must be >= 1");
  if (k > positions.size()) {
    throw ParameterError("kmeans: k = " + std::to_string(k) + " exceeds the " +
                         std::to_string(positions.size()) + " points");
  }
  for (const auto& p : positions) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw ParameterError("kmeans: non-finite coordinate");
    }
  }
  if (options.max_iterations == 0 || options.restarts == 0) {
    throw ParameterError("kmeans: max_iterations and restarts must be >= 1");
  }

  const std::size_t n = positions.size();
  Rng rng(seed);
  // Farthest-point starts from every point (seed-selected one first), then
  // random k-subsets of the points.
  std::vector<std::size_t> firsts(n);
  std::iota(firsts.begin(), firsts.end(), 0);
  std::swap(firsts[0], firsts[rng.index(n)]);
  rng.shuffle(std::span<std::size_t>(firsts).subspan(1));

  ClusterAssignment best;
  for (std::size_t r = 0; r < options.restarts; ++r) {
    std::vector<Vec3> initial;
    if (r < n) {
      initial = farthest_point_init(positions, k, firsts[r]);
    } else {
      std::vector<std::size_t> idx(n);
      std::iota(idx.begin(), idx.end(), 0);
      rng.shuffle(std::span<std::size_t>(idx));
      for (std::size_t c = 0; c < k; ++c) initial.push_back(positions[idx[c]]);
    }
    ClusterAssignment run = lloyd(positions, std::move(initial), options.max_iterations);
    if (r == 0 || run.wcss < best.wcss) best = std::move(run);
  }
  return best;
}

std::size_t chord_knee(std::span<const double> wcss) {
  const std::size_t n = wcss.size();
  if (n <= 2) return 1;
  const double top = wcss.front();
  const double bottom = wcss.back();
  const double span_y = top - bottom;
  if (!(span_y > 0.0)) return 1;
  // Both axes scaled to [0, 1]; the chord runs from (0, 1) to (1, 0), so the
  // perpendicular distance of (x, y) below it is (1 - x - y) / sqrt(2).
  std::size_t best = 1;
  double best_d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(n - 1);
    const double y = (wcss[i] - bottom) / span_y;
    const double d = (1.0 - x - y) / std::numbers::sqrt2;
    if (d > best_d) {
      best_d = d;
      best = i + 1;
    }
  }
  return best;
}

ElbowResult elbow_select(std::span<const Vec3> positions, std::size_t k_max, std::uint64_t seed,
                         const KMeansOptions& options) {
  if (k_max < 2 || k_max > positions.size()) {
    throw ParameterError("elbow_select: k_max must be in [2, " + std::to_string(positions.size()) + "]");
  }
  ElbowResult out;
  for (std::size_t k = 1; k <= k_max; ++k) {
    out.wcss.push_back(kmeans(positions, k, derive_seed(seed, {k}), options).wcss);
  }
  out.selected_k = chord_knee(out.wcss);
  return out;
}

ClusterAssignment fixed_assignment(const ElectrodeLayout& layout) {
  layout.validate();
  if (!layout.fixed_clusters) throw ValidationError("layout has no fixed cluster map");
  if (layout.size() == 0) throw ValidationError("layout has no channels");
  const auto& labels = *layout.fixed_clusters;

  std::map<int, std::size_t> compact;
  for (int l : labels) compact.emplace(l, 0);
  ClusterAssignment out;
  for (auto& [label, index] : compact) {
    index = out.label_remap.size();
    out.label_remap.push_back(label);
  }
  out.n_clusters = compact.size();
  for (int l : labels) out.assignment.push_back(compact.at(l));
  const auto positions = layout.positions();
  out.centroids = cluster_means(positions, out.assignment, out.n_clusters);
  out.wcss = compute_wcss(positions, out.assignment, out.centroids);
  return out;
}

bool is_feasible(const ClusterAssignment& clusters, std::size_t min_size) {
  const auto sizes = clusters.sizes();
  return std::ranges::all_of(sizes, [&](std::size_t n) { return n >= min_size; });
}

}  // namespace spikebci
