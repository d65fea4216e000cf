#include "spikebci/spike_encoding.hpp"

#include "spikebci/errors.hpp"

#include <algorithm>
#include <cmath>

namespace spikebci {

TemporalContrastEncoder::TemporalContrastEncoder(double threshold) : threshold_(threshold) {
  if (!(threshold > 0.0) || !std::isfinite(threshold)) {
    throw ParameterError("encoding threshold must be finite and > 0");
  }
}

std::int8_t TemporalContrastEncoder::step(double value) {
  if (!primed_) {
    primed_ = true;
    previous_ = value;
    residual_ = 0.0;
    return 0;
  }
  const double delta = value - previous_ + residual_;
  previous_ = value;
  if (std::abs(delta) >= threshold_) {
    residual_ = 0.0;
    return delta > 0.0 ? 1 : -1;
  }
  residual_ = delta;
  return 0;
}

void TemporalContrastEncoder::reset() {
  residual_ = 0.0;
  previous_ = 0.0;
  primed_ = false;
}

SpikeTrain encode_channel(std::span<const double> signal, double threshold, std::size_t channel) {
  if (signal.empty()) throw ParameterError("cannot encode an empty channel");
  TemporalContrastEncoder encoder(threshold);
  SpikeTrain out(signal.size());
  for (std::size_t k = 0; k < signal.size(); ++k) {
    if (!std::isfinite(signal[k])) throw EncodingError(channel, k, "non-finite sample value");
    out[k] = encoder.step(signal[k]);
  }
  return out;
}

SpikeRaster encode_signal(const SignalMatrix& signal, double threshold) {
  SpikeRaster raster(signal.rows(), signal.cols());
  for (std::size_t c = 0; c < signal.rows(); ++c) {
    const SpikeTrain train = encode_channel(signal.row(c), threshold, c);
    std::copy(train.begin(), train.end(), raster.row(c).begin());
  }
  return raster;
}

SpikeRaster encode_sample(const Sample& sample, double threshold) {
  return encode_signal(sample.signal, threshold);
}

std::size_t spike_count(const SpikeRaster& raster) {
  return static_cast<std::size_t>(
      std::count_if(raster.values().begin(), raster.values().end(), [](std::int8_t v) { return v != 0; }));
}

}  // namespace spikebci
