#include "spikebci/conv_snn.hpp"

#include "spikebci/errors.hpp"
#include "spikebci/parallel.hpp"
#include "spikebci/rng.hpp"
#include "spikebci/spike_encoding.hpp"

#include <cmath>
#include <exception>

namespace spikebci {

void PlasticityParams::validate() const {
  if (!std::isfinite(tau_r)) throw ParameterError("tau_r must be finite");
  if (temporal_stride < 1) throw ParameterError("temporal stride must be >= 1");
  if (channel_stride < 1) throw ParameterError("channel stride must be >= 1");
}

KernelWeights draw_initial_weights(std::uint64_t seed) {
  Rng rng(seed);
  KernelWeights w{};
  for (double& v : w) v = rng.uniform(0.0, 0.1);
  return w;
}

KernelBank init_kernel_bank(const ClusterAssignment& clusters, std::uint64_t seed,
                            std::size_t channel_stride) {
  if (channel_stride < 1) throw ParameterError("channel stride must be >= 1");
  KernelBank bank;
  bank.initial = draw_initial_weights(seed);
  const auto members = clusters.members();
  for (std::size_t c = 0; c < members.size(); ++c) {
    const auto& m = members[c];
    if (m.size() < kKernelSize) {
      throw TopologyError(c, "has " + std::to_string(m.size()) + " channels, a kernel needs " +
                                 std::to_string(kKernelSize));
    }
    for (std::size_t start = 0; start + kKernelSize <= m.size(); start += channel_stride) {
      Kernel k;
      k.weights = bank.initial;
      k.cluster = c;
      k.window_start = start;
      for (std::size_t r = 0; r < kKernelSize; ++r) k.channels[r] = m[start + r];
      bank.kernels.push_back(k);
    }
  }
  return bank;
}

int conv_step(const Kernel& kernel, const Patch& patch, IFNeuron& neuron) {
  double drive = 0.0;
  for (std::size_t i = 0; i < kKernelCells; ++i) {
    if (patch[i] > 0) {
      drive += kernel.weights[i];
    } else if (patch[i] < 0) {
      drive -= kernel.weights[i];
    }
  }
  neuron.potential += drive;
  if (neuron.potential >= neuron.threshold) {
    neuron.potential = 0.0;
    return 1;
  }
  if (neuron.potential <= -neuron.threshold) {
    neuron.potential = 0.0;
    return -1;
  }
  return 0;
}

double plasticity_magnitude(int input_spike, int lag, double tau_r) {
  const double x = -static_cast<double>(lag) - tau_r;
  return input_spike > 0 ? std::exp(x) : std::exp(-(x * x));
}

void apply_plasticity(Kernel& kernel, const Patch& patch, int output_spike, double tau_r,
                      const PlasticityObserver& observer, std::size_t kernel_index, std::size_t step) {
  if (output_spike == 0) throw ContractError("apply_plasticity called without an output spike");
  for (std::size_t r = 0; r < kKernelSize; ++r) {
    for (std::size_t c = 0; c < kKernelSize; ++c) {
      const int in = patch[cell(r, c)];
      if (in == 0) continue;
      const double m = plasticity_magnitude(in, lag_of_column(c), tau_r);
      const double delta = output_spike > 0 ? m : -m;
      kernel.weights[cell(r, c)] += delta;
      if (observer) observer({kernel_index, step, r, c, in, output_spike, delta});
    }
  }
}

std::size_t convolution_steps(std::size_t timesteps, std::size_t temporal_stride) {
  if (temporal_stride < 1) throw ParameterError("temporal stride must be >= 1");
  if (timesteps < kKernelSize) return 0;
  return (timesteps - kKernelSize) / temporal_stride + 1;
}

std::size_t feature_length(std::size_t n_channels, std::size_t n_clusters) {
  if (n_channels < 2 * n_clusters) throw ParameterError("n_e must be >= 2 * n_c");
  return kKernelCells * (n_channels - 2 * n_clusters);
}

Patch gather_patch(const SpikeRaster& raster, const Kernel& kernel, std::size_t first_timestep) {
  Patch p{};
  for (std::size_t r = 0; r < kKernelSize; ++r) {
    const auto row = raster.row(kernel.channels[r]);
    for (std::size_t c = 0; c < kKernelSize; ++c) p[cell(r, c)] = row[first_timestep + c];
  }
  return p;
}

std::vector<double> run_kernel_bank(const SpikeRaster& raster, const KernelBank& bank,
                                    const PlasticityParams& params, double theta_conv,
                                    const PlasticityObserver& observer) {
  params.validate();
  if (!(theta_conv > 0.0) || !std::isfinite(theta_conv)) {
    throw ParameterError("convolution threshold must be finite and > 0");
  }
  if (raster.cols() < kKernelSize) {
    throw ParameterError("raster has " + std::to_string(raster.cols()) + " timesteps, need >= 3");
  }
  const std::size_t steps = convolution_steps(raster.cols(), params.temporal_stride);
  std::vector<double> features;
  features.reserve(bank.feature_length());
  for (std::size_t k = 0; k < bank.kernels.size(); ++k) {
    Kernel kernel = bank.kernels[k];
    kernel.weights = bank.initial;
    for (std::size_t r = 0; r < kKernelSize; ++r) {
      if (kernel.channels[r] >= raster.rows()) {
        throw ValidationError("kernel channel " + std::to_string(kernel.channels[r]) +
                              " outside raster of " + std::to_string(raster.rows()) + " channels");
      }
    }
    IFNeuron neuron{0.0, theta_conv};
    for (std::size_t s = 0; s < steps; ++s) {
      const Patch patch = gather_patch(raster, kernel, s * params.temporal_stride);
      const int out = conv_step(kernel, patch, neuron);
      if (out != 0) apply_plasticity(kernel, patch, out, params.tau_r, observer, k, s);
    }
    features.insert(features.end(), kernel.weights.begin(), kernel.weights.end());
  }
  return features;
}

FeatureVector extract_features(const SpikeRaster& raster, const ClusterAssignment& clusters,
                               std::uint64_t bank_seed, const PlasticityParams& params,
                               double theta_conv) {
  if (raster.rows() != clusters.assignment.size()) {
    throw ValidationError("raster has " + std::to_string(raster.rows()) + " channels, clustering covers " +
                          std::to_string(clusters.assignment.size()));
  }
  const KernelBank bank = init_kernel_bank(clusters, bank_seed, params.channel_stride);
  FeatureVector out;
  out.values = run_kernel_bank(raster, bank, params, theta_conv);
  return out;
}

std::vector<FeatureVector> extract_dataset_features(const LabeledDataset& dataset,
                                                    const ClusterAssignment& clusters,
                                                    const FeatureParams& params, std::size_t threads) {
  dataset.validate();
  params.plasticity.validate();
  if (clusters.assignment.size() != dataset.layout.size()) {
    throw ValidationError("clustering covers " + std::to_string(clusters.assignment.size()) +
                          " channels, layout has " + std::to_string(dataset.layout.size()));
  }
  const KernelBank bank = init_kernel_bank(clusters, params.kernel_seed, params.plasticity.channel_stride);
  std::vector<FeatureVector> out(dataset.samples.size());
  parallel_for(dataset.samples.size(), threads, [&](std::size_t i) {
    const Sample& sample = dataset.samples[i];
    try {
      const SpikeRaster raster =
          params.normalize ? encode_sample(normalize_sample(sample), params.theta_th)
                           : encode_sample(sample, params.theta_th);
      out[i].values = run_kernel_bank(raster, bank, params.plasticity, params.theta_conv);
      out[i].sample_id = sample.id();
      out[i].label = sample.label;
    } catch (const std::exception& e) {
      std::throw_with_nested(SampleError(sample.id(), e.what()));
    }
  });
  return out;
}

}  // namespace spikebci
