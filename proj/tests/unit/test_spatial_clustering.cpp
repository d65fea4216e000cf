#include "spikebci/errors.hpp"
#include "spikebci/rng.hpp"
#include "spikebci/spatial_clustering.hpp"

#include "../oracles/reference.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace spikebci;

namespace {

std::vector<Vec3> random_points(Rng& rng, std::size_t n) {
  std::vector<Vec3> p(n);
  for (auto& v : p) v = {rng.uniform(), rng.uniform(), rng.uniform()};
  return p;
}

std::vector<reference::Point> to_ref(const std::vector<Vec3>& p) {
  std::vector<reference::Point> out;
  for (const auto& v : p) out.push_back({v.x, v.y, v.z});
  return out;
}

void expect_nearest_centroid(const std::vector<Vec3>& p, const ClusterAssignment& a) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double own = squared_distance(p[i], a.centroids[a.assignment[i]]);
    for (std::size_t c = 0; c < a.n_clusters; ++c) {
      const double d = squared_distance(p[i], a.centroids[c]);
      EXPECT_TRUE(own < d || (own == d && a.assignment[i] <= c)) << "point " << i << " cluster " << c;
    }
  }
}

}  // namespace

TEST(KMeans, FourPointTwoClusterExample) {
  const std::vector<Vec3> p{{0, 0, 0}, {0, 0, 1}, {10, 10, 10}, {10, 10, 11}};
  const ClusterAssignment a = kmeans(p, 2, 42);
  EXPECT_EQ(a.assignment[0], a.assignment[1]);
  EXPECT_EQ(a.assignment[2], a.assignment[3]);
  EXPECT_NE(a.assignment[0], a.assignment[2]);
  EXPECT_DOUBLE_EQ(a.wcss, 1.0);
  EXPECT_DOUBLE_EQ(reference::exhaustive_wcss(to_ref(p), 2), 1.0);
}

TEST(KMeans, KEqualsPointCount) {
  Rng rng(1);
  const auto p = random_points(rng, 7);
  const ClusterAssignment a = kmeans(p, 7, 3);
  EXPECT_EQ(a.wcss, 0.0);
  EXPECT_EQ(a.sizes(), std::vector<std::size_t>(7, 1));
}

TEST(KMeans, SingleClusterIsMean) {
  const std::vector<Vec3> p{{0, 0, 0}, {2, 0, 0}, {0, 4, 0}, {2, 4, 8}};
  const ClusterAssignment a = kmeans(p, 1, 0);
  EXPECT_DOUBLE_EQ(a.centroids[0].x, 1.0);
  EXPECT_DOUBLE_EQ(a.centroids[0].y, 2.0);
  EXPECT_DOUBLE_EQ(a.centroids[0].z, 2.0);
}

TEST(KMeans, ParameterErrors) {
  const std::vector<Vec3> p{{0, 0, 0}, {1, 1, 1}};
  EXPECT_THROW(kmeans(p, 3, 0), ParameterError);
  EXPECT_THROW(kmeans(p, 0, 0), ParameterError);
  const std::vector<Vec3> bad{{0, 0, 0}, {NAN, 1, 1}};
  EXPECT_THROW(kmeans(bad, 1, 0), ParameterError);
}

TEST(KMeans, DuplicatePointsStillFillEveryCluster) {
  const std::vector<Vec3> p{{1, 1, 1}, {1, 1, 1}, {1, 1, 1}, {1, 1, 1}, {5, 5, 5}};
  const ClusterAssignment a = kmeans(p, 3, 9);
  for (std::size_t n : a.sizes()) EXPECT_GE(n, 1u);
}

TEST(KMeans, InvariantsOnRandomSets) {
  Rng rng(2);
  for (int rep = 0; rep < 200; ++rep) {
    const auto p = random_points(rng, 3 + rng.index(40));
    const std::size_t k = 1 + rng.index(std::min<std::size_t>(p.size(), 8));
    const ClusterAssignment a = kmeans(p, k, static_cast<std::uint64_t>(rep));
    for (std::size_t i = 1; i < a.wcss_history.size(); ++i) {
      EXPECT_LE(a.wcss_history[i], a.wcss_history[i - 1] * (1 + 1e-12));
    }
    for (std::size_t n : a.sizes()) EXPECT_GE(n, 1u);
    expect_nearest_centroid(p, a);
    EXPECT_NEAR(a.wcss, compute_wcss(p, a.assignment, a.centroids), 1e-12);
  }
}

TEST(KMeans, Deterministic) {
  Rng rng(3);
  const auto p = random_points(rng, 30);
  const ClusterAssignment a = kmeans(p, 4, 77);
  const ClusterAssignment b = kmeans(p, 4, 77);
  EXPECT_EQ(a.assignment, b.assignment);
  EXPECT_EQ(a.wcss, b.wcss);
}

TEST(KMeans, RigidMotionInvariance) {
  Rng rng(4);
  for (int rep = 0; rep < 20; ++rep) {
    auto p = random_points(rng, 20);
    const ClusterAssignment a = kmeans(p, 3, 5);
    const double th = rng.uniform(0, 6.28);
    std::vector<Vec3> q;
    for (const auto& v : p) {
      q.push_back({std::cos(th) * v.x - std::sin(th) * v.y + 3.0, std::sin(th) * v.x + std::cos(th) * v.y - 7.0,
                   v.z + 1.5});
    }
    const ClusterAssignment b = kmeans(q, 3, 5);
    EXPECT_NEAR(b.wcss, a.wcss, 1e-9 * a.wcss);
    // same partition up to relabelling
    for (std::size_t i = 0; i < p.size(); ++i)
      for (std::size_t j = 0; j < p.size(); ++j)
        EXPECT_EQ(a.assignment[i] == a.assignment[j], b.assignment[i] == b.assignment[j]);
  }
}

TEST(ChordKnee, PicksMaximumNormalisedDistance) {
  // normalised y: 1, 0.3, 0.1, 0 at x = 0, 1/3, 2/3, 1 -> distances 0, 0.37/√2, 0.23/√2, 0
  EXPECT_EQ(chord_knee(std::vector<double>{100, 30, 10, 0}), 2u);
  EXPECT_EQ(chord_knee(std::vector<double>{5, 5, 5}), 1u);
}

TEST(Elbow, FiveSeparatedBlobs) {
  Rng rng(6);
  const std::vector<Vec3> centres{{0, 0, 0}, {30, 0, 0}, {0, 30, 0}, {0, 0, 30}, {30, 30, 30}};
  std::vector<Vec3> p;
  for (const auto& c : centres)
    for (int i = 0; i < 5; ++i) p.push_back({c.x + rng.uniform(-1, 1), c.y + rng.uniform(-1, 1), c.z + rng.uniform(-1, 1)});
  const ElbowResult e = elbow_select(p, 10, 8);
  EXPECT_EQ(e.selected_k, 5u);
  ASSERT_EQ(e.wcss.size(), 10u);
}

TEST(Elbow, CollinearPointsGiveDecreasingCurve) {
  std::vector<Vec3> p;
  for (int i = 0; i < 12; ++i) p.push_back({static_cast<double>(i), 0, 0});
  const ElbowResult e = elbow_select(p, 8, 1);
  for (std::size_t i = 1; i < e.wcss.size(); ++i) EXPECT_LT(e.wcss[i], e.wcss[i - 1]);
  EXPECT_GE(e.selected_k, 1u);
  EXPECT_LE(e.selected_k, 8u);
}

TEST(Elbow, RangeChecked) {
  const std::vector<Vec3> p{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  EXPECT_THROW(elbow_select(p, 1, 0), ParameterError);
  EXPECT_THROW(elbow_select(p, 4, 0), ParameterError);
}

TEST(FixedAssignment, NineClusterMontage) {
  ElectrodeLayout layout;
  std::vector<int> labels;
  for (int i = 0; i < 27; ++i) {
    layout.channels.push_back({"e" + std::to_string(i), {static_cast<double>(i), 0, 0}});
    labels.push_back(i / 3);
  }
  layout.fixed_clusters = labels;
  const ClusterAssignment a = fixed_assignment(layout);
  EXPECT_EQ(a.n_clusters, 9u);
  EXPECT_TRUE(is_feasible(a));
}

TEST(FixedAssignment, SingleClusterCentroidIsMean) {
  ElectrodeLayout layout;
  layout.channels = {{"a", {0, 0, 0}}, {"b", {4, 0, 0}}, {"c", {2, 6, 0}}};
  layout.fixed_clusters = std::vector<int>{0, 0, 0};
  const ClusterAssignment a = fixed_assignment(layout);
  EXPECT_EQ(a.n_clusters, 1u);
  EXPECT_DOUBLE_EQ(a.centroids[0].x, 2.0);
  EXPECT_DOUBLE_EQ(a.centroids[0].y, 2.0);
  EXPECT_DOUBLE_EQ(a.wcss, (4 + 4) + (4 + 4) + (0 + 16.0));
}

TEST(FixedAssignment, GapsAreCompacted) {
  ElectrodeLayout layout;
  layout.channels = {{"a", {0, 0, 0}}, {"b", {1, 0, 0}}, {"c", {2, 0, 0}}};
  layout.fixed_clusters = std::vector<int>{2, 0, 2};
  const ClusterAssignment a = fixed_assignment(layout);
  EXPECT_EQ(a.n_clusters, 2u);
  EXPECT_EQ(a.assignment, (std::vector<std::size_t>{1, 0, 1}));
  EXPECT_EQ(a.label_remap, (std::vector<int>{0, 2}));
}

TEST(FixedAssignment, MissingMapOrPartialMapRejected) {
  ElectrodeLayout layout;
  layout.channels = {{"a", {0, 0, 0}}, {"b", {1, 0, 0}}};
  EXPECT_THROW(fixed_assignment(layout), ValidationError);
  layout.fixed_clusters = std::vector<int>{0};
  EXPECT_THROW(fixed_assignment(layout), ValidationError);
}
