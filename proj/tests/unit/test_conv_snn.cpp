#include "spikebci/conv_snn.hpp"
#include "spikebci/errors.hpp"
#include "spikebci/rng.hpp"
#include "spikebci/spike_encoding.hpp"

#include "../oracles/reference.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace spikebci;

namespace {

ClusterAssignment contiguous_clusters(const std::vector<std::size_t>& sizes) {
  ClusterAssignment a;
  a.n_clusters = sizes.size();
  for (std::size_t c = 0; c < sizes.size(); ++c)
    for (std::size_t i = 0; i < sizes[c]; ++i) a.assignment.push_back(c);
  a.centroids.resize(sizes.size());
  return a;
}

SpikeRaster random_raster(Rng& rng, std::size_t channels, std::size_t steps, double density = 0.4) {
  SpikeRaster r(channels, steps);
  for (auto& v : r.values()) {
    const double u = rng.uniform();
    v = u < density / 2 ? 1 : (u < density ? -1 : 0);
  }
  return r;
}

std::vector<std::vector<int>> to_rows(const SpikeRaster& r) {
  std::vector<std::vector<int>> out(r.rows(), std::vector<int>(r.cols()));
  for (std::size_t c = 0; c < r.rows(); ++c)
    for (std::size_t t = 0; t < r.cols(); ++t) out[c][t] = r(c, t);
  return out;
}

Kernel uniform_kernel(double w) {
  Kernel k;
  k.weights.fill(w);
  k.channels = {0, 1, 2};
  return k;
}

}  // namespace

TEST(KernelBank, PaperTopologyDimension) {
  const ClusterAssignment a = contiguous_clusters({6, 5, 4, 5, 5});
  const KernelBank bank = init_kernel_bank(a, 1);
  EXPECT_EQ(bank.kernels.size(), 15u);
  EXPECT_EQ(bank.feature_length(), 135u);
  EXPECT_EQ(feature_length(25, 5), 135u);
  for (const auto& k : bank.kernels) EXPECT_EQ(k.weights, bank.initial);
}

TEST(KernelBank, MinimalClusterHasOneKernel) {
  const KernelBank bank = init_kernel_bank(contiguous_clusters({3}), 1);
  ASSERT_EQ(bank.kernels.size(), 1u);
  EXPECT_EQ(bank.kernels[0].channels, (std::array<std::size_t, 3>{0, 1, 2}));
}

TEST(KernelBank, SmallClusterIsTopologyError) {
  try {
    init_kernel_bank(contiguous_clusters({4, 2, 5}), 1);
    FAIL() << "expected TopologyError";
  } catch (const TopologyError& e) {
    EXPECT_EQ(e.cluster(), 1u);
  }
}

TEST(KernelBank, InitialWeightsDeterministicAndInRange) {
  EXPECT_EQ(draw_initial_weights(5), draw_initial_weights(5));
  EXPECT_NE(draw_initial_weights(5), draw_initial_weights(6));
  for (double w : draw_initial_weights(5)) {
    EXPECT_GE(w, 0.0);
    EXPECT_LT(w, 0.1);
  }
}

TEST(KernelBank, WindowsFollowAscendingClusterMembers) {
  ClusterAssignment a;
  a.n_clusters = 2;
  a.assignment = {1, 0, 1, 0, 1, 0, 1};
  const KernelBank bank = init_kernel_bank(a, 0);
  ASSERT_EQ(bank.kernels.size(), 3u);
  EXPECT_EQ(bank.kernels[0].channels, (std::array<std::size_t, 3>{1, 3, 5}));
  EXPECT_EQ(bank.kernels[1].channels, (std::array<std::size_t, 3>{0, 2, 4}));
  EXPECT_EQ(bank.kernels[2].channels, (std::array<std::size_t, 3>{2, 4, 6}));
  EXPECT_EQ(bank.kernels[2].cluster, 1u);
  EXPECT_EQ(bank.kernels[2].window_start, 1u);
}

TEST(ConvStep, ZeroPatchLeavesPotential) {
  const Kernel k = uniform_kernel(0.05);
  IFNeuron n{0.03, 0.1};
  EXPECT_EQ(conv_step(k, Patch{}, n), 0);
  EXPECT_EQ(n.potential, 0.03);
}

TEST(ConvStep, AccumulatesThenFiresAndResets) {
  const Kernel k = uniform_kernel(0.05);
  Patch p{};
  p[cell(1, 2)] = 1;
  IFNeuron n{0.0, 0.1};
  EXPECT_EQ(conv_step(k, p, n), 0);
  EXPECT_DOUBLE_EQ(n.potential, 0.05);
  EXPECT_EQ(conv_step(k, p, n), 1);
  EXPECT_EQ(n.potential, 0.0);
}

TEST(ConvStep, NegativeThresholdCrossing) {
  const Kernel k = uniform_kernel(0.06);
  Patch p{};
  p[cell(0, 0)] = -1;
  p[cell(2, 1)] = -1;
  IFNeuron n{0.0, 0.1};
  EXPECT_EQ(conv_step(k, p, n), -1);
  EXPECT_EQ(n.potential, 0.0);
}

TEST(ConvStep, SignFlipFlipsOutputs) {
  Rng rng(8);
  for (int rep = 0; rep < 50; ++rep) {
    Kernel k;
    k.weights = draw_initial_weights(static_cast<std::uint64_t>(rep));
    IFNeuron a{0.0, 0.1};
    IFNeuron b{0.0, 0.1};
    for (int s = 0; s < 200; ++s) {
      Patch p{};
      for (auto& v : p) {
        const double u = rng.uniform();
        v = u < 0.2 ? 1 : (u < 0.4 ? -1 : 0);
      }
      Patch q = p;
      for (auto& v : q) v = static_cast<std::int8_t>(-v);
      ASSERT_EQ(conv_step(k, q, b), -conv_step(k, p, a));
      ASSERT_EQ(b.potential, -a.potential);
    }
  }
}

TEST(ConvStep, PotentialStaysInsideThresholds) {
  Rng rng(9);
  Kernel k;
  k.weights = draw_initial_weights(3);
  IFNeuron n{0.0, 0.1};
  for (int s = 0; s < 5000; ++s) {
    Patch p{};
    for (auto& v : p) v = static_cast<std::int8_t>(static_cast<int>(rng.index(3)) - 1);
    conv_step(k, p, n);
    ASSERT_GT(n.potential, -0.1);
    ASSERT_LT(n.potential, 0.1);
  }
}

TEST(Plasticity, PaperMagnitudes) {
  EXPECT_DOUBLE_EQ(plasticity_magnitude(1, 0, 5.0), std::exp(-5.0));
  EXPECT_NEAR(plasticity_magnitude(1, 0, 5.0), 6.7379e-3, 1e-7);
  EXPECT_DOUBLE_EQ(plasticity_magnitude(-1, 0, 5.0), std::exp(-25.0));
  EXPECT_NEAR(plasticity_magnitude(-1, 0, 5.0), 1.39e-11, 1e-13);
  EXPECT_NEAR(plasticity_magnitude(1, 1, 5.0), 2.4788e-3, 1e-7);
}

TEST(Plasticity, PositiveOutputPotentiatesCurrentColumn) {
  Kernel k = uniform_kernel(0.0);
  Patch p{};
  p[cell(0, 2)] = 1;   // lag 0, +1 input
  p[cell(1, 2)] = -1;  // lag 0, -1 input
  apply_plasticity(k, p, 1, 5.0);
  EXPECT_EQ(k.weights[cell(0, 2)], std::exp(-5.0));
  EXPECT_EQ(k.weights[cell(1, 2)], std::exp(-25.0));
  for (std::size_t i = 0; i < kKernelCells; ++i) {
    if (i != cell(0, 2) && i != cell(1, 2)) EXPECT_EQ(k.weights[i], 0.0);
  }
}

TEST(Plasticity, NegativeOutputDepressesBySameMagnitude) {
  Kernel k = uniform_kernel(0.0);
  Patch p{};
  p[cell(2, 1)] = 1;  // lag 1
  apply_plasticity(k, p, -1, 5.0);
  EXPECT_EQ(k.weights[cell(2, 1)], -std::exp(-6.0));
  EXPECT_NEAR(k.weights[cell(2, 1)], -2.4788e-3, 1e-7);
}

TEST(Plasticity, EmptyPatchNoChangeAndZeroOutputIsContractError) {
  Kernel k = uniform_kernel(0.04);
  const Kernel before = k;
  apply_plasticity(k, Patch{}, 1, 5.0);
  EXPECT_EQ(k.weights, before.weights);
  EXPECT_THROW(apply_plasticity(k, Patch{}, 0, 5.0), ContractError);
}

TEST(ExtractFeatures, ConvolutionStepCount) {
  EXPECT_EQ(convolution_steps(1000, 3), 333u);
  EXPECT_EQ(convolution_steps(3, 3), 1u);
  EXPECT_EQ(convolution_steps(5, 1), 3u);
  EXPECT_EQ(convolution_steps(2, 1), 0u);

  // count the patches actually visited
  const KernelBank bank = init_kernel_bank(contiguous_clusters({3}), 1);
  SpikeRaster r(3, 1000, 1);
  std::set<std::size_t> steps;
  run_kernel_bank(r, bank, {5.0, 3, 1}, 1e-9, [&](const PlasticityEvent& e) { steps.insert(e.step); });
  EXPECT_EQ(steps.size(), 333u);
  EXPECT_EQ(*steps.rbegin(), 332u);
}

TEST(ExtractFeatures, ZeroRasterReturnsInitialWeights) {
  const ClusterAssignment a = contiguous_clusters({4, 3, 5});
  const SpikeRaster r(12, 60, 0);
  const FeatureVector f = extract_features(r, a, 21, {5.0, 3, 1}, 0.1);
  const KernelWeights w0 = draw_initial_weights(21);
  ASSERT_EQ(f.values.size(), feature_length(12, 3));
  for (std::size_t i = 0; i < f.values.size(); ++i) EXPECT_EQ(f.values[i], w0[i % 9]);
}

TEST(ExtractFeatures, MatchesNaiveReferenceBitForBit) {
  Rng rng(10);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t channels = 3 + rng.index(2);
    const std::size_t steps = 3 + rng.index(28);
    const SpikeRaster r = random_raster(rng, channels, steps, rng.uniform(0.1, 0.9));
    const ClusterAssignment a = contiguous_clusters({channels});
    const std::size_t stride = 1 + rng.index(3);
    const double theta = rng.uniform(0.02, 0.15);
    const FeatureVector f = extract_features(r, a, static_cast<std::uint64_t>(rep), {5.0, stride, 1}, theta);

    std::vector<std::array<std::size_t, 3>> windows;
    for (std::size_t s = 0; s + 3 <= channels; ++s) windows.push_back({s, s + 1, s + 2});
    const auto want = reference::conv_snn(to_rows(r), windows, draw_initial_weights(static_cast<std::uint64_t>(rep)),
                                          5.0, theta, stride);
    ASSERT_EQ(f.values, want) << "rep " << rep;
  }
}

TEST(ExtractFeatures, EventDrivenLocality) {
  Rng rng(12);
  const ClusterAssignment a = contiguous_clusters({5, 4});
  SpikeRaster r(9, 90, 0);
  // spikes only in cluster 1, rows 5..7 (its first window)
  for (std::size_t c = 5; c <= 7; ++c)
    for (std::size_t t = 0; t < 90; ++t) r(c, t) = static_cast<std::int8_t>(static_cast<int>(rng.index(3)) - 1);
  const FeatureVector f = extract_features(r, a, 4, {5.0, 3, 1}, 0.1);
  const KernelWeights w0 = draw_initial_weights(4);
  // kernels: c0 {0,1,2},{1,2,3},{2,3,4}; c1 {5,6,7},{6,7,8}
  for (std::size_t k : {0u, 1u, 2u}) {
    for (std::size_t i = 0; i < 9; ++i) EXPECT_EQ(f.values[k * 9 + i], w0[i]);
  }
  bool changed = false;
  for (std::size_t i = 0; i < 9; ++i) changed = changed || f.values[3 * 9 + i] != w0[i];
  EXPECT_TRUE(changed);
}

TEST(ExtractFeatures, UpdateMagnitudesComeFromSixValueTable) {
  const std::set<double> positive{std::exp(-5.0), std::exp(-6.0), std::exp(-7.0)};
  const std::set<double> negative{std::exp(-25.0), std::exp(-36.0), std::exp(-49.0)};
  Rng rng(13);
  const KernelBank bank = init_kernel_bank(contiguous_clusters({6}), 2);
  std::size_t events = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const SpikeRaster r = random_raster(rng, 6, 300);
    run_kernel_bank(r, bank, {5.0, 3, 1}, 0.1, [&](const PlasticityEvent& e) {
      ++events;
      const double m = std::abs(e.delta);
      ASSERT_TRUE(e.input_spike > 0 ? positive.contains(m) : negative.contains(m));
      ASSERT_EQ(e.delta > 0, e.output_spike > 0);
    });
  }
  EXPECT_GT(events, 0u);
}

TEST(ExtractFeatures, RejectsShortRasterAndChannelMismatch) {
  const ClusterAssignment a = contiguous_clusters({3});
  EXPECT_THROW(extract_features(SpikeRaster(3, 2), a, 0, {}, 0.1), ParameterError);
  EXPECT_THROW(extract_features(SpikeRaster(4, 20), a, 0, {}, 0.1), ValidationError);
}

TEST(ExtractDatasetFeatures, EmptyDatasetAndParallelEquivalence) {
  LabeledDataset ds = generate_synthetic(3, 9, 4, 120, 5);
  ClusterAssignment a = contiguous_clusters({3, 3, 3});
  FeatureParams params;
  params.kernel_seed = 3;
  const auto seq = extract_dataset_features(ds, a, params, 1);
  const auto par = extract_dataset_features(ds, a, params, 4);
  ASSERT_EQ(seq.size(), ds.samples.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    EXPECT_EQ(seq[i].values, par[i].values);
    EXPECT_EQ(seq[i].sample_id, ds.samples[i].id());
    EXPECT_EQ(seq[i].label, ds.samples[i].label);
    EXPECT_EQ(seq[i].values.size(), feature_length(9, 3));
  }
  ds.samples.clear();
  EXPECT_TRUE(extract_dataset_features(ds, a, params, 2).empty());
}

TEST(ExtractDatasetFeatures, PerSampleIsolation) {
  const LabeledDataset ds = generate_synthetic(2, 6, 3, 90, 8);
  const ClusterAssignment a = contiguous_clusters({3, 3});
  FeatureParams params;
  LabeledDataset single = ds;
  single.samples = {ds.samples.back()};
  const auto all = extract_dataset_features(ds, a, params);
  const auto one = extract_dataset_features(single, a, params);
  EXPECT_EQ(all.back().values, one.front().values);
}

TEST(ExtractDatasetFeatures, ErrorsCarrySampleId) {
  LabeledDataset ds = generate_synthetic(2, 3, 1, 20, 8);
  ds.samples[1].signal(0, 4) = std::numeric_limits<double>::infinity();
  const ClusterAssignment a = contiguous_clusters({3});
  try {
    extract_dataset_features(ds, a, FeatureParams{});
    FAIL() << "expected SampleError";
  } catch (const SampleError& e) {
    EXPECT_EQ(e.sample_id(), ds.samples[1].id());
  }
}
