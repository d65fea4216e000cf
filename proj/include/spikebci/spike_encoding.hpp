#pragma once

#include "spikebci/signal_io.hpp"
#include "spikebci/types.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace spikebci {

using SpikeTrain = std::vector<std::int8_t>;

// Temporal-contrast encoder state for one channel.
//
// At every step after the first, delta = f(t_k) - f(t_{k-1}) + residual. When
// |delta| >= threshold a spike with the sign of delta is emitted and the
// residual is cleared to exactly zero; otherwise the residual becomes delta.
// The first sample only primes the previous value and emits nothing.
class TemporalContrastEncoder {
 public:
  explicit TemporalContrastEncoder(double threshold);

  std::int8_t step(double value);
  void reset();

  double residual() const { return residual_; }
  double threshold() const { return threshold_; }

 private:
  double threshold_;
  double residual_{0.0};
  double previous_{0.0};
  bool primed_{false};
};

// Throws EncodingError (carrying `channel` and the timestep) on non-finite
// input, ParameterError on threshold <= 0 or empty input.
SpikeTrain encode_channel(std::span<const double> signal, double threshold, std::size_t channel = 0);

SpikeRaster encode_signal(const SignalMatrix& signal, double threshold);
SpikeRaster encode_sample(const Sample& sample, double threshold);

std::size_t spike_count(const SpikeRaster& raster);

}  // namespace spikebci
