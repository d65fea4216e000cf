#pragma once

#include "spikebci/classifier.hpp"
#include "spikebci/conv_snn.hpp"
#include "spikebci/signal_io.hpp"
#include "spikebci/spatial_clustering.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace spikebci {

inline constexpr std::string_view kVersion = "0.1.0";

enum class DataMode { synthetic, files };
enum class ClusterMode { count, elbow, fixed };

// Flat key = value run description. Every model parameter must be spelled
// out; there are no compiled-in defaults for them.
struct PipelineConfig {
  DataMode mode{DataMode::synthetic};

  // files mode
  std::filesystem::path signals_path;
  std::filesystem::path labels_path;
  std::filesystem::path layout_path;
  double sample_rate{0.0};

  // synthetic mode
  std::size_t synth_classes{0};
  std::size_t synth_channels{0};
  std::size_t synth_blobs{0};
  std::size_t synth_trials{0};
  double synth_noise{0.0};

  std::size_t window_len{0};
  double theta_th{0.0};
  ClusterMode cluster_mode{ClusterMode::count};
  std::size_t n_clusters{0};  // ClusterMode::count only
  std::size_t k_max{0};       // elbow curve range
  std::size_t kernel_rows{3};
  std::size_t kernel_cols{3};
  std::size_t temporal_stride{0};
  std::size_t channel_stride{0};
  double tau_r{0.0};
  double theta_conv{0.0};
  std::size_t knn_k{0};
  double train_fraction{0.0};
  std::size_t split_repeats{0};

  std::uint64_t seed_data{0};
  std::uint64_t seed_cluster{0};
  std::uint64_t seed_kernel{0};
  std::uint64_t seed_split{0};

  std::size_t threads{1};
  std::vector<std::string> class_names;  // optional
  std::filesystem::path output_dir;

  // Relative paths are resolved against `base_dir`.
  static PipelineConfig parse(std::string_view text, const std::string& source = "<config>",
                              const std::filesystem::path& base_dir = {});
  static PipelineConfig load(const std::filesystem::path& path);

  // Throws ParameterError on out-of-range values.
  void validate() const;
  // Canonical key = value text (fixed key order).
  std::string to_text() const;

  FeatureParams feature_params() const;
};

class PipelineError : public std::runtime_error {
 public:
  PipelineError(std::string stage, const std::string& what)
      : std::runtime_error("stage '" + stage + "' failed: " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct StageTiming {
  std::string stage;
  double seconds{0.0};
};

struct RunManifest {
  std::string config_text;
  std::map<std::string, std::string> output_hashes;  // file name -> sha256 hex
  std::vector<StageTiming> timings;
  std::string version{kVersion};
  bool complete{false};
  std::string failed_stage;
  std::string failure;

  std::string to_text() const;
};

struct ClusteringOutcome {
  ClusterAssignment clusters;
  std::vector<double> wcss_curve;  // k = 1..k_max (clipped to n_e)
  std::size_t elbow_k{0};
  std::vector<std::size_t> feasible_k;  // k values on the curve whose clusters all have >= 3 channels
};

struct PipelineResult {
  RepeatedEvaluation evaluation;
  ClusteringOutcome clustering;
  std::vector<FeatureVector> features;
  std::vector<std::string> class_names;
  RunManifest manifest;
};

// Builds the labeled dataset from the config (synthetic generator or CSV
// files, segmented into window_len samples).
LabeledDataset load_dataset(const PipelineConfig& config);

ClusteringOutcome compute_clustering(const PipelineConfig& config, const ElectrodeLayout& layout);

std::vector<std::string> resolve_class_names(const PipelineConfig& config, const LabeledDataset& dataset);

// Full run: writes assignment.csv, wcss_curve.csv, features.csv, report.json,
// confusion.csv and manifest.txt into out_dir (defaults to
// config.output_dir). A lockfile guards the directory for the run.
PipelineResult run_pipeline(const PipelineConfig& config, std::optional<std::filesystem::path> out_dir = {});

// Classification stage alone, from a features CSV.
RepeatedEvaluation evaluate_features(const PipelineConfig& config, std::span<const FeatureVector> features,
                                     std::size_t n_classes);

struct SweepRow {
  std::size_t n_clusters{0};
  bool feasible{false};
  double mean_accuracy{0.0};
  double std_accuracy{0.0};
  std::string note;
};

// Accuracy as a function of the k-means cluster count, with data, W0 and
// splits held fixed. Infeasible k are reported, not fatal.
std::vector<SweepRow> sweep_clusters(const PipelineConfig& config, std::span<const std::size_t> k_range);
std::string sweep_to_csv(std::span<const SweepRow> rows);

// "2-8" or "2,3,5"
std::vector<std::size_t> parse_k_range(std::string_view text);

struct ConfusionRendering {
  std::string csv;
  std::string text;
};

// Named rows/columns with row-normalised percentages. Throws ValidationError
// when class_names does not match the matrix size.
ConfusionRendering report_confusion(const EvalReport& report, std::span<const std::string> class_names);

std::string report_to_json(const RepeatedEvaluation& eval, const PipelineConfig& config,
                           std::span<const std::string> class_names);
// Reads the combined report (and class names) back from report JSON.
EvalReport report_from_json(std::string_view json, std::vector<std::string>* class_names = nullptr);

std::string features_to_csv(std::span<const FeatureVector> features);
std::vector<FeatureVector> read_features_csv(const std::filesystem::path& path);

std::string assignment_to_csv(const ClusterAssignment& clusters, const ElectrodeLayout& layout);
std::string wcss_curve_to_csv(std::span<const double> wcss);
std::string raster_to_csv(const SpikeRaster& raster);

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

// Creates `dir` and holds an exclusive lockfile in it until destruction.
class OutputLock {
 public:
  explicit OutputLock(const std::filesystem::path& dir);
  ~OutputLock();
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::filesystem::path path_;
};

void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace spikebci
