#pragma once

#include "spikebci/types.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace spikebci {

// One labeled movement window cut out of a continuous recording.
struct Trial {
  std::string id;
  SignalMatrix signal;  // channels x timesteps
  double sample_rate{1000.0};
  int label{0};
  std::string subject;

  void validate() const;
};

// Fixed-length classifier input carved out of a trial.
struct Sample {
  SignalMatrix signal;  // channels x window_len
  int label{0};
  std::string trial_id;
  std::size_t window_index{0};

  std::string id() const { return trial_id + "/" + std::to_string(window_index); }
};

struct Electrode {
  std::string id;
  Vec3 position;
};

struct ElectrodeLayout {
  std::vector<Electrode> channels;
  // Fixed cluster label per channel (EEG-style montage). Labels need not be
  // contiguous; fixed_assignment() compacts them.
  std::optional<std::vector<int>> fixed_clusters;

  std::size_t size() const { return channels.size(); }
  std::vector<Vec3> positions() const;
  std::vector<std::string> ids() const;
  // Throws ValidationError on duplicate ids or a partial cluster map.
  void validate() const;
};

struct LabeledDataset {
  std::vector<Sample> samples;
  std::vector<std::string> classes;
  ElectrodeLayout layout;

  void validate() const;
};

struct Recording {
  std::vector<Trial> trials;
  ElectrodeLayout layout;
};

ElectrodeLayout load_layout(const std::filesystem::path& layout_path);

// Reads the signals/labels/layout CSV triple. Trials come out in labels-file
// order; the layout is reordered to match the signal column order.
Recording load_trials(const std::filesystem::path& signals_path,
                      const std::filesystem::path& labels_path,
                      const std::filesystem::path& layout_path, double sample_rate = 1000.0,
                      const std::string& subject = {});

// Inverse of load_trials: trials are laid back-to-back in one recording.
// Writes signals.csv, labels.csv and layout.csv into `dir`.
void write_recording(const std::filesystem::path& dir, std::span<const Trial> trials,
                     const ElectrodeLayout& layout);

struct SegmentResult {
  std::vector<Sample> samples;
  std::size_t skipped{0};  // trials shorter than one window
};

// Non-overlapping windows aligned to trial start; a trailing remainder
// shorter than window_len is dropped.
SegmentResult segment_trials(std::span<const Trial> trials, std::size_t window_len);

// Per-channel min-max map onto [-1, 1]; constant channels become zero.
void normalize_channel(std::span<double> channel);
Sample normalize_sample(Sample sample);

struct SyntheticOptions {
  std::size_t n_classes{6};
  std::size_t n_channels{15};
  std::size_t n_blobs{5};
  // Total trial count; trial i belongs to class i % n_classes.
  std::size_t n_trials{120};
  std::size_t window_len{1000};
  double sample_rate{1000.0};
  double noise{0.15};  // std of additive Gaussian noise, signal amplitude is ~1
  std::uint64_t seed{0};
};

struct SyntheticData {
  std::vector<Trial> trials;  // each 2 * window_len long
  ElectrodeLayout layout;
  std::vector<std::string> classes;
};

// Channels sit in n_blobs well separated 3-D blobs (blob-contiguous channel
// order). Minimum centre distance is `separation`, points lie within
// `radius` of their centre.
ElectrodeLayout make_blob_layout(std::size_t n_channels, std::size_t n_blobs, double separation,
                                 double radius, std::uint64_t seed);

SyntheticData generate_synthetic_trials(const SyntheticOptions& options);
LabeledDataset generate_synthetic(const SyntheticOptions& options);
LabeledDataset generate_synthetic(std::size_t n_classes, std::size_t n_channels,
                                  std::size_t n_trials_per_class, std::size_t window_len,
                                  std::uint64_t seed);

}  // namespace spikebci
