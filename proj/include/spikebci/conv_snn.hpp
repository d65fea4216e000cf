#pragma once

#include "spikebci/signal_io.hpp"
#include "spikebci/spatial_clustering.hpp"
#include "spikebci/types.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace spikebci {

inline constexpr std::size_t kKernelSize = 3;
inline constexpr std::size_t kKernelCells = kKernelSize * kKernelSize;

// 3x3 kernel, row-major. Row r is channel offset r inside the window; column
// j holds time lag 2 - j, so column 2 is the current timestep.
using KernelWeights = std::array<double, kKernelCells>;

// Spike values under a kernel at one convolution step, same layout as
// KernelWeights.
using Patch = std::array<std::int8_t, kKernelCells>;

inline constexpr std::size_t cell(std::size_t row, std::size_t col) { return row * kKernelSize + col; }
inline constexpr int lag_of_column(std::size_t col) { return static_cast<int>(kKernelSize - 1 - col); }

struct Kernel {
  KernelWeights weights{};
  std::size_t cluster{0};
  std::size_t window_start{0};  // position of the first channel within the cluster member list
  std::array<std::size_t, kKernelSize> channels{};  // raster rows covered
};

// Leak-free integrate-and-fire neuron with a symmetric signed threshold.
struct IFNeuron {
  double potential{0.0};
  double threshold{0.1};
};

struct PlasticityParams {
  double tau_r{5.0};
  std::size_t temporal_stride{3};
  std::size_t channel_stride{1};

  void validate() const;
};

struct KernelBank {
  KernelWeights initial{};  // shared W0
  std::vector<Kernel> kernels;

  std::size_t feature_length() const { return kernels.size() * kKernelCells; }
};

struct FeatureVector {
  std::vector<double> values;
  std::string sample_id;
  int label{0};
};

struct PlasticityEvent {
  std::size_t kernel{0};
  std::size_t step{0};
  std::size_t row{0};
  std::size_t col{0};
  int input_spike{0};
  int output_spike{0};
  double delta{0.0};  // signed weight change applied
};

using PlasticityObserver = std::function<void(const PlasticityEvent&)>;

// W0, uniform on [0, 0.1), drawn once from `seed`.
KernelWeights draw_initial_weights(std::uint64_t seed);

// One kernel per 3-channel window of each cluster (windows advance by
// channel_stride through the ascending member list). Throws TopologyError for
// clusters with fewer than 3 channels.
KernelBank init_kernel_bank(const ClusterAssignment& clusters, std::uint64_t seed,
                            std::size_t channel_stride = 1);

// Integrates the kernel response into the neuron. Returns +1 / -1 when the
// potential reaches +threshold / -threshold (and resets it to 0), else 0.
int conv_step(const Kernel& kernel, const Patch& patch, IFNeuron& neuron);

// Unsigned update size for an input spike at a given lag:
// exp(-lag - tau_r) for +1 inputs and exp(-(lag + tau_r)^2) for -1 inputs.
double plasticity_magnitude(int input_spike, int lag, double tau_r);

// Adds output_spike * plasticity_magnitude to every cell with an input spike.
// Throws ContractError when output_spike is 0.
void apply_plasticity(Kernel& kernel, const Patch& patch, int output_spike, double tau_r,
                      const PlasticityObserver& observer = {}, std::size_t kernel_index = 0,
                      std::size_t step = 0);

// floor((timesteps - 3) / stride) + 1
std::size_t convolution_steps(std::size_t timesteps, std::size_t temporal_stride);

// 9 * (n_e - 2 * n_c) for unit channel stride
std::size_t feature_length(std::size_t n_channels, std::size_t n_clusters);

Patch gather_patch(const SpikeRaster& raster, const Kernel& kernel, std::size_t first_timestep);

// Runs every kernel of `bank` (reset to W0) over the raster and returns the
// final weights: clusters ascending, windows ascending, row-major.
std::vector<double> run_kernel_bank(const SpikeRaster& raster, const KernelBank& bank,
                                    const PlasticityParams& params, double theta_conv,
                                    const PlasticityObserver& observer = {});

FeatureVector extract_features(const SpikeRaster& raster, const ClusterAssignment& clusters,
                               std::uint64_t bank_seed, const PlasticityParams& params,
                               double theta_conv);

struct FeatureParams {
  double theta_th{0.22};
  double theta_conv{0.1};
  PlasticityParams plasticity;
  std::uint64_t kernel_seed{0};
  bool normalize{true};
};

// normalize -> encode -> kernel bank, for every sample; order preserved.
// threads == 0 uses the hardware concurrency. Results do not depend on the
// thread count.
std::vector<FeatureVector> extract_dataset_features(const LabeledDataset& dataset,
                                                    const ClusterAssignment& clusters,
                                                    const FeatureParams& params, std::size_t threads = 1);

}  // namespace spikebci
