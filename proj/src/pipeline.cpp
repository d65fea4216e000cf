#include "spikebci/pipeline.hpp"

#include "spikebci/csv.hpp"
#include "spikebci/errors.hpp"
#include "spikebci/parallel.hpp"
#include "spikebci/rng.hpp"
#include "spikebci/spike_encoding.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace spikebci {

namespace {

using json = nlohmann::ordered_json;

const std::set<std::string, std::less<>> kCommonKeys = {
    "mode",         "window_len",    "theta_th",       "n_clusters",    "k_max",
    "kernel_dims",  "temporal_stride", "channel_stride", "tau_r",        "theta_conv",
    "knn_k",        "train_fraction", "split_repeats",  "seed_data",     "seed_cluster",
    "seed_kernel",  "seed_split",    "threads",        "output_dir"};
const std::set<std::string, std::less<>> kFileKeys = {"signals_path", "labels_path", "layout_path",
                                                      "sample_rate"};
const std::set<std::string, std::less<>> kSynthKeys = {"synth_classes", "synth_channels", "synth_blobs",
                                                       "synth_trials", "synth_noise"};
const std::set<std::string, std::less<>> kOptionalKeys = {"class_names"};

struct Entry {
  std::string value;
  std::size_t line;
};

std::uint64_t parse_u64(const std::string& text, const std::string& source, std::size_t line,
                        const std::string& key) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw ParseError(source, line, key, "not a non-negative integer: '" + text + "'");
  }
  return v;
}

std::string fmt(double v) { return csv::format_double(v); }

}  // namespace

PipelineConfig PipelineConfig::parse(std::string_view text, const std::string& source,
                                     const std::filesystem::path& base_dir) {
  std::map<std::string, Entry, std::less<>> entries;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = csv::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(source, line_no, std::string(line), "expected key = value");
    const std::string key(csv::trim(line.substr(0, eq)));
    const std::string value(csv::trim(line.substr(eq + 1)));
    if (!kCommonKeys.contains(key) && !kFileKeys.contains(key) && !kSynthKeys.contains(key) &&
        !kOptionalKeys.contains(key)) {
      throw ParseError(source, line_no, key, "unknown key");
    }
    if (!entries.emplace(key, Entry{value, line_no}).second) {
      throw ParseError(source, line_no, key, "duplicate key");
    }
  }

  auto require = [&](const std::string& key) -> const Entry& {
    const auto it = entries.find(key);
    if (it == entries.end()) throw ParseError(source, 0, key, "missing required key");
    return it->second;
  };
  auto as_size = [&](const std::string& key) {
    const Entry& e = require(key);
    return static_cast<std::size_t>(parse_u64(e.value, source, e.line, key));
  };
  auto as_double = [&](const std::string& key) {
    const Entry& e = require(key);
    return csv::parse_double(e.value, source, e.line, key);
  };
  auto as_path = [&](const std::string& key) {
    std::filesystem::path p(require(key).value);
    return p.is_relative() && !base_dir.empty() ? (base_dir / p).lexically_normal() : p;
  };

  PipelineConfig c;
  const Entry& mode = require("mode");
  if (mode.value == "synthetic") {
    c.mode = DataMode::synthetic;
  } else if (mode.value == "files") {
    c.mode = DataMode::files;
  } else {
    throw ParseError(source, mode.line, "mode", "expected 'synthetic' or 'files'");
  }
  const auto& foreign = c.mode == DataMode::synthetic ? kFileKeys : kSynthKeys;
  for (const auto& [key, e] : entries) {
    if (foreign.contains(key)) {
      throw ParseError(source, e.line, key, "not valid in mode '" + mode.value + "'");
    }
  }
  if (c.mode == DataMode::files) {
    c.signals_path = as_path("signals_path");
    c.labels_path = as_path("labels_path");
    c.layout_path = as_path("layout_path");
    c.sample_rate = as_double("sample_rate");
  } else {
    c.synth_classes = as_size("synth_classes");
    c.synth_channels = as_size("synth_channels");
    c.synth_blobs = as_size("synth_blobs");
    c.synth_trials = as_size("synth_trials");
    c.synth_noise = as_double("synth_noise");
  }

  c.window_len = as_size("window_len");
  c.theta_th = as_double("theta_th");
  const Entry& nc = require("n_clusters");
  if (nc.value == "auto") {
    c.cluster_mode = ClusterMode::elbow;
  } else if (nc.value == "fixed") {
    c.cluster_mode = ClusterMode::fixed;
  } else {
    c.cluster_mode = ClusterMode::count;
    c.n_clusters = static_cast<std::size_t>(parse_u64(nc.value, source, nc.line, "n_clusters"));
  }
  c.k_max = as_size("k_max");
  const Entry& dims = require("kernel_dims");
  const auto x = dims.value.find('x');
  if (x == std::string::npos) throw ParseError(source, dims.line, "kernel_dims", "expected RxC");
  c.kernel_rows = static_cast<std::size_t>(parse_u64(dims.value.substr(0, x), source, dims.line, "kernel_dims"));
  c.kernel_cols = static_cast<std::size_t>(parse_u64(dims.value.substr(x + 1), source, dims.line, "kernel_dims"));
  c.temporal_stride = as_size("temporal_stride");
  c.channel_stride = as_size("channel_stride");
  c.tau_r = as_double("tau_r");
  c.theta_conv = as_double("theta_conv");
  c.knn_k = as_size("knn_k");
  c.train_fraction = as_double("train_fraction");
  c.split_repeats = as_size("split_repeats");
  c.seed_data = parse_u64(require("seed_data").value, source, require("seed_data").line, "seed_data");
  c.seed_cluster = parse_u64(require("seed_cluster").value, source, require("seed_cluster").line, "seed_cluster");
  c.seed_kernel = parse_u64(require("seed_kernel").value, source, require("seed_kernel").line, "seed_kernel");
  c.seed_split = parse_u64(require("seed_split").value, source, require("seed_split").line, "seed_split");
  c.threads = as_size("threads");
  c.output_dir = as_path("output_dir");
  if (const auto it = entries.find("class_names"); it != entries.end() && !it->second.value.empty()) {
    c.class_names = csv::split(it->second.value);
  }
  c.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), 0, "file", "cannot open config");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string(), path.parent_path());
}

void PipelineConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ParameterError(std::string(name) + " must be finite and > 0");
  };
  if (mode == DataMode::files) {
    positive(sample_rate, "sample_rate");
  } else {
    if (synth_classes < 2) throw ParameterError("synth_classes must be >= 2");
    if (synth_channels < 3) throw ParameterError("synth_channels must be >= 3");
    if (synth_blobs < 1 || synth_blobs > synth_channels) throw ParameterError("synth_blobs must be in [1, synth_channels]");
    if (synth_trials < 1) throw ParameterError("synth_trials must be >= 1");
    if (!(synth_noise >= 0.0) || !std::isfinite(synth_noise)) throw ParameterError("synth_noise must be >= 0");
  }
  if (window_len < kKernelSize) throw ParameterError("window_len must be >= 3");
  positive(theta_th, "theta_th");
  positive(theta_conv, "theta_conv");
  if (!std::isfinite(tau_r)) throw ParameterError("tau_r must be finite");
  if (cluster_mode == ClusterMode::count && n_clusters < 1) throw ParameterError("n_clusters must be >= 1");
  if (k_max < 2) throw ParameterError("k_max must be >= 2");
  if (kernel_rows != kKernelSize || kernel_cols != kKernelSize) throw ParameterError("only 3x3 kernels are supported");
  if (temporal_stride < 1 || channel_stride < 1) throw ParameterError("strides must be >= 1");
  if (knn_k < 1) throw ParameterError("knn_k must be >= 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ParameterError("train_fraction must lie in (0, 1)");
  if (split_repeats < 1) throw ParameterError("split_repeats must be >= 1");
}

std::string PipelineConfig::to_text() const {
  std::ostringstream o;
  o << "mode = " << (mode == DataMode::synthetic ? "synthetic" : "files") << '\n';
  if (mode == DataMode::files) {
    o << "signals_path = " << signals_path.string() << '\n'
      << "labels_path = " << labels_path.string() << '\n'
      << "layout_path = " << layout_path.string() << '\n'
      << "sample_rate = " << fmt(sample_rate) << '\n';
  } else {
    o << "synth_classes = " << synth_classes << '\n'
      << "synth_channels = " << synth_channels << '\n'
      << "synth_blobs = " << synth_blobs << '\n'
      << "synth_trials = " << synth_trials << '\n'
      << "synth_noise = " << fmt(synth_noise) << '\n';
  }
  o << "window_len = " << window_len << '\n' << "theta_th = " << fmt(theta_th) << '\n' << "n_clusters = ";
  switch (cluster_mode) {
    case ClusterMode::count: o << n_clusters; break;
    case ClusterMode::elbow: o << "auto"; break;
    case ClusterMode::fixed: o << "fixed"; break;
  }
  o << '\n'
    << "k_max = " << k_max << '\n'
    << "kernel_dims = " << kernel_rows << 'x' << kernel_cols << '\n'
    << "temporal_stride = " << temporal_stride << '\n'
    << "channel_stride = " << channel_stride << '\n'
    << "tau_r = " << fmt(tau_r) << '\n'
    << "theta_conv = " << fmt(theta_conv) << '\n'
    << "knn_k = " << knn_k << '\n'
    << "train_fraction = " << fmt(train_fraction) << '\n'
    << "split_repeats = " << split_repeats << '\n'
    << "seed_data = " << seed_data << '\n'
    << "seed_cluster = " << seed_cluster << '\n'
    << "seed_kernel = " << seed_kernel << '\n'
    << "seed_split = " << seed_split << '\n'
    << "threads = " << threads << '\n'
    << "output_dir = " << output_dir.string() << '\n';
  if (!class_names.empty()) {
    o << "class_names = ";
    for (std::size_t i = 0; i < class_names.size(); ++i) o << (i ? "," : "") << class_names[i];
    o << '\n';
  }
  return o.str();
}

FeatureParams PipelineConfig::feature_params() const {
  FeatureParams p;
  p.theta_th = theta_th;
  p.theta_conv = theta_conv;
  p.plasticity.tau_r = tau_r;
  p.plasticity.temporal_stride = temporal_stride;
  p.plasticity.channel_stride = channel_stride;
  p.kernel_seed = seed_kernel;
  return p;
}

std::string RunManifest::to_text() const {
  std::ostringstream o;
  o << "# spikebci run manifest\n"
    << "version = " << version << '\n'
    << "status = " << (complete ? "complete" : "failed") << '\n';
  if (!complete) {
    o << "failed_stage = " << failed_stage << '\n' << "failure = " << failure << '\n';
  }
  o << "\n[config]\n" << config_text << "\n[outputs]\n";
  for (const auto& [name, hash] : output_hashes) o << name << " sha256=" << hash << '\n';
  o << "\n[timings]\n";
  for (const auto& t : timings) o << t.stage << " = " << std::fixed << std::setprecision(6) << t.seconds << "s\n";
  return o.str();
}

LabeledDataset load_dataset(const PipelineConfig& config) {
  config.validate();
  if (config.mode == DataMode::synthetic) {
    SyntheticOptions o;
    o.n_classes = config.synth_classes;
    o.n_channels = config.synth_channels;
    o.n_blobs = config.synth_blobs;
    o.n_trials = config.synth_trials;
    o.window_len = config.window_len;
    o.noise = config.synth_noise;
    o.seed = config.seed_data;
    return generate_synthetic(o);
  }
  Recording rec = load_trials(config.signals_path, config.labels_path, config.layout_path, config.sample_rate);
  LabeledDataset ds;
  ds.samples = segment_trials(rec.trials, config.window_len).samples;
  ds.layout = std::move(rec.layout);
  int max_label = -1;
  for (const auto& t : rec.trials) max_label = std::max(max_label, t.label);
  const auto n_classes = static_cast<std::size_t>(max_label + 1);
  if (!config.class_names.empty()) {
    if (config.class_names.size() < n_classes) {
      throw ValidationError("class_names lists " + std::to_string(config.class_names.size()) +
                            " names but labels reach class " + std::to_string(max_label));
    }
    ds.classes = config.class_names;
  } else {
    for (std::size_t c = 0; c < n_classes; ++c) ds.classes.push_back(std::to_string(c));
  }
  ds.validate();
  return ds;
}

std::vector<std::string> resolve_class_names(const PipelineConfig& config, const LabeledDataset& dataset) {
  if (!config.class_names.empty()) {
    if (config.class_names.size() != dataset.classes.size()) {
      throw ValidationError("class_names has " + std::to_string(config.class_names.size()) + " entries, dataset has " +
                            std::to_string(dataset.classes.size()) + " classes");
    }
    return config.class_names;
  }
  return dataset.classes;
}

ClusteringOutcome compute_clustering(const PipelineConfig& config, const ElectrodeLayout& layout) {
  const auto positions = layout.positions();
  ClusteringOutcome out;
  const std::size_t k_max = std::min(config.k_max, positions.size());
  if (k_max >= 2) {
    const ElbowResult elbow = elbow_select(positions, k_max, config.seed_cluster);
    out.wcss_curve = elbow.wcss;
    out.elbow_k = elbow.selected_k;
    for (std::size_t k = 1; k <= k_max; ++k) {
      if (is_feasible(kmeans(positions, k, derive_seed(config.seed_cluster, {k})))) out.feasible_k.push_back(k);
    }
  }
  switch (config.cluster_mode) {
    case ClusterMode::fixed:
      out.clusters = fixed_assignment(layout);
      break;
    case ClusterMode::elbow:
      if (out.elbow_k == 0) throw ParameterError("elbow selection needs at least 2 channels");
      out.clusters = kmeans(positions, out.elbow_k, derive_seed(config.seed_cluster, {out.elbow_k}));
      break;
    case ClusterMode::count:
      out.clusters = kmeans(positions, config.n_clusters, derive_seed(config.seed_cluster, {config.n_clusters}));
      break;
  }
  const auto sizes = out.clusters.sizes();
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    if (sizes[c] < kMinClusterSize) {
      throw TopologyError(c, "has " + std::to_string(sizes[c]) + " channels, a kernel needs " +
                                 std::to_string(kMinClusterSize));
    }
  }
  return out;
}

namespace {

class StageRunner {
 public:
  explicit StageRunner(RunManifest& manifest) : manifest_(manifest) {}

  template <typename Fn>
  auto run(const std::string& name, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    try {
      if constexpr (std::is_void_v<decltype(fn())>) {
        fn();
        record(name, start);
      } else {
        auto result = fn();
        record(name, start);
        return result;
      }
    } catch (const std::exception& e) {
      record(name, start);
      manifest_.complete = false;
      manifest_.failed_stage = name;
      manifest_.failure = e.what();
      throw;
    }
  }

 private:
  void record(const std::string& name, std::chrono::steady_clock::time_point start) {
    const std::chrono::duration<double> d = std::chrono::steady_clock::now() - start;
    manifest_.timings.push_back({name, d.count()});
  }
  RunManifest& manifest_;
};

std::vector<SpikeRaster> encode_dataset(const LabeledDataset& ds, double theta_th, std::size_t threads) {
  std::vector<SpikeRaster> rasters(ds.samples.size());
  parallel_for(ds.samples.size(), threads, [&](std::size_t i) {
    try {
      rasters[i] = encode_sample(normalize_sample(ds.samples[i]), theta_th);
    } catch (const std::exception& e) {
      std::throw_with_nested(SampleError(ds.samples[i].id(), e.what()));
    }
  });
  return rasters;
}

std::vector<FeatureVector> features_from_rasters(const LabeledDataset& ds, std::span<const SpikeRaster> rasters,
                                                 const ClusterAssignment& clusters, const FeatureParams& params,
                                                 std::size_t threads) {
  const KernelBank bank = init_kernel_bank(clusters, params.kernel_seed, params.plasticity.channel_stride);
  std::vector<FeatureVector> out(rasters.size());
  parallel_for(rasters.size(), threads, [&](std::size_t i) {
    out[i].values = run_kernel_bank(rasters[i], bank, params.plasticity, params.theta_conv);
    out[i].sample_id = ds.samples[i].id();
    out[i].label = ds.samples[i].label;
  });
  return out;
}

}  // namespace

RepeatedEvaluation evaluate_features(const PipelineConfig& config, std::span<const FeatureVector> features,
                                     std::size_t n_classes) {
  return evaluate_repeated(features, config.knn_k, n_classes, config.train_fraction, config.seed_split,
                           config.split_repeats);
}

PipelineResult run_pipeline(const PipelineConfig& config, std::optional<std::filesystem::path> out_dir) {
  config.validate();
  const std::filesystem::path dir = out_dir.value_or(config.output_dir);
  if (dir.empty()) throw ParameterError("no output directory given");
  OutputLock lock(dir);

  PipelineResult result;
  RunManifest& manifest = result.manifest;
  manifest.config_text = config.to_text();
  StageRunner stages(manifest);
  std::vector<std::string> written;
  auto emit = [&](const std::string& name, const std::string& text) {
    write_text_file(dir / name, text);
    written.push_back(name);
  };
  auto finish_manifest = [&] {
    for (const auto& name : written) manifest.output_hashes[name] = sha256_file(dir / name);
    write_text_file(dir / "manifest.txt", manifest.to_text());
  };

  try {
    const LabeledDataset dataset = stages.run("load", [&] {
      LabeledDataset ds = load_dataset(config);
      result.class_names = resolve_class_names(config, ds);
      return ds;
    });

    result.clustering = stages.run("cluster", [&] {
      ClusteringOutcome c = compute_clustering(config, dataset.layout);
      emit("assignment.csv", assignment_to_csv(c.clusters, dataset.layout));
      if (!c.wcss_curve.empty()) emit("wcss_curve.csv", wcss_curve_to_csv(c.wcss_curve));
      return c;
    });

    result.features = stages.run("features", [&] {
      const auto rasters = encode_dataset(dataset, config.theta_th, config.threads);
      auto f = features_from_rasters(dataset, rasters, result.clustering.clusters, config.feature_params(),
                                     config.threads);
      emit("features.csv", features_to_csv(f));
      return f;
    });

    result.evaluation = stages.run("classify", [&] {
      RepeatedEvaluation eval = evaluate_features(config, result.features, dataset.classes.size());
      emit("report.json", report_to_json(eval, config, result.class_names));
      emit("confusion.csv", report_confusion(eval.combined, result.class_names).csv);
      return eval;
    });
  } catch (const std::exception& e) {
    finish_manifest();
    std::throw_with_nested(PipelineError(manifest.failed_stage, e.what()));
  }
  manifest.complete = true;
  finish_manifest();
  return result;
}

std::vector<SweepRow> sweep_clusters(const PipelineConfig& config, std::span<const std::size_t> k_range) {
  config.validate();
  const LabeledDataset dataset = load_dataset(config);
  const auto positions = dataset.layout.positions();
  const auto rasters = encode_dataset(dataset, config.theta_th, config.threads);
  const FeatureParams params = config.feature_params();

  std::vector<SweepRow> rows;
  for (std::size_t k : k_range) {
    SweepRow row;
    row.n_clusters = k;
    if (k < 1 || k > positions.size()) {
      row.note = "k outside [1, " + std::to_string(positions.size()) + "]";
      rows.push_back(row);
      continue;
    }
    const ClusterAssignment clusters = kmeans(positions, k, derive_seed(config.seed_cluster, {k}));
    if (!is_feasible(clusters)) {
      row.note = "cluster with fewer than 3 channels";
      rows.push_back(row);
      continue;
    }
    const auto features = features_from_rasters(dataset, rasters, clusters, params, config.threads);
    const RepeatedEvaluation eval = evaluate_features(config, features, dataset.classes.size());
    row.feasible = true;
    row.mean_accuracy = eval.mean_accuracy;
    row.std_accuracy = eval.std_accuracy;
    rows.push_back(row);
  }
  return rows;
}

std::string sweep_to_csv(std::span<const SweepRow> rows) {
  std::ostringstream o;
  o << "n_clusters,feasible,mean_accuracy,std_accuracy,note\n";
  for (const auto& r : rows) {
    o << r.n_clusters << ',' << (r.feasible ? 1 : 0) << ',';
    if (r.feasible) o << fmt(r.mean_accuracy) << ',' << fmt(r.std_accuracy);
    else o << ',';
    o << ',' << r.note << '\n';
  }
  return o.str();
}

std::vector<std::size_t> parse_k_range(std::string_view text) {
  const std::string source = "k-range";
  std::vector<std::size_t> out;
  const auto dash = text.find('-');
  if (dash != std::string_view::npos) {
    const auto lo = csv::parse_int(csv::trim(text.substr(0, dash)), source, 1, "k_min");
    const auto hi = csv::parse_int(csv::trim(text.substr(dash + 1)), source, 1, "k_max");
    if (lo < 1 || hi < lo) throw ParameterError("k range must satisfy 1 <= lo <= hi");
    for (auto k = lo; k <= hi; ++k) out.push_back(static_cast<std::size_t>(k));
    return out;
  }
  for (const auto& part : csv::split(text)) {
    const auto k = csv::parse_int(part, source, 1, "k");
    if (k < 1) throw ParameterError("k values must be >= 1");
    out.push_back(static_cast<std::size_t>(k));
  }
  return out;
}

ConfusionRendering report_confusion(const EvalReport& report, std::span<const std::string> class_names) {
  const std::size_t n = report.confusion.size();
  if (class_names.size() != n) {
    throw ValidationError("got " + std::to_string(class_names.size()) + " class names for a " + std::to_string(n) +
                          "x" + std::to_string(n) + " confusion matrix");
  }
  auto pct = [&](std::size_t i, std::size_t j) {
    std::size_t row = 0;
    for (std::size_t c : report.confusion[i]) row += c;
    return row ? 100.0 * static_cast<double>(report.confusion[i][j]) / static_cast<double>(row) : 0.0;
  };

  std::ostringstream csv_out;
  csv_out << "true_class";
  for (const auto& name : class_names) csv_out << ',' << name;
  for (const auto& name : class_names) csv_out << ',' << name << "_pct";
  csv_out << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    csv_out << class_names[i];
    for (std::size_t j = 0; j < n; ++j) csv_out << ',' << report.confusion[i][j];
    for (std::size_t j = 0; j < n; ++j) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.2f", pct(i, j));
      csv_out << ',' << buf;
    }
    csv_out << '\n';
  }

  std::size_t width = 10;
  for (const auto& name : class_names) width = std::max(width, name.size() + 2);
  std::ostringstream text;
  text << std::setw(static_cast<int>(width)) << "true\\pred";
  for (const auto& name : class_names) text << std::setw(static_cast<int>(width + 8)) << name;
  text << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    text << std::setw(static_cast<int>(width)) << class_names[i];
    for (std::size_t j = 0; j < n; ++j) {
      char buf[48];
      std::snprintf(buf, sizeof(buf), "%zu (%5.1f%%)", report.confusion[i][j], pct(i, j));
      text << std::setw(static_cast<int>(width + 8)) << buf;
    }
    text << '\n';
  }
  char acc[64];
  std::snprintf(acc, sizeof(acc), "accuracy %.4f over %zu test samples\n", report.accuracy, report.total());
  text << acc;
  return {csv_out.str(), text.str()};
}

std::string report_to_json(const RepeatedEvaluation& eval, const PipelineConfig& config,
                           std::span<const std::string> class_names) {
  json j;
  j["version"] = std::string(kVersion);
  j["classes"] = std::vector<std::string>(class_names.begin(), class_names.end());
  j["knn_k"] = config.knn_k;
  j["train_fraction"] = config.train_fraction;
  j["split_repeats"] = config.split_repeats;
  j["seed_split"] = config.seed_split;
  j["mean_accuracy"] = eval.mean_accuracy;
  j["std_accuracy"] = eval.std_accuracy;
  json folds = json::array();
  for (const auto& f : eval.folds) {
    folds.push_back({{"fold", f.fold}, {"accuracy", f.accuracy}, {"test_size", f.total()}, {"confusion", f.confusion}});
  }
  j["folds"] = std::move(folds);
  j["combined"] = {{"accuracy", eval.combined.accuracy},
                   {"test_size", eval.combined.total()},
                   {"confusion", eval.combined.confusion},
                   {"precision", eval.combined.precision},
                   {"recall", eval.combined.recall}};
  return j.dump(2) + "\n";
}

EvalReport report_from_json(std::string_view text, std::vector<std::string>* class_names) {
  const json j = json::parse(text);
  EvalReport r;
  const auto& c = j.at("combined");
  r.confusion = c.at("confusion").get<std::vector<std::vector<std::size_t>>>();
  r.accuracy = c.at("accuracy").get<double>();
  r.precision = c.at("precision").get<std::vector<double>>();
  r.recall = c.at("recall").get<std::vector<double>>();
  r.split_seed = j.at("seed_split").get<std::uint64_t>();
  if (class_names) *class_names = j.at("classes").get<std::vector<std::string>>();
  return r;
}

std::string features_to_csv(std::span<const FeatureVector> features) {
  std::ostringstream o;
  const std::size_t dim = features.empty() ? 0 : features.front().values.size();
  o << "sample_id,label";
  for (std::size_t i = 0; i < dim; ++i) o << ",w" << i;
  o << '\n';
  for (const auto& f : features) {
    if (f.values.size() != dim) throw ValidationError("feature vectors differ in length");
    o << f.sample_id << ',' << f.label;
    for (double v : f.values) o << ',' << fmt(v);
    o << '\n';
  }
  return o.str();
}

std::vector<FeatureVector> read_features_csv(const std::filesystem::path& path) {
  const csv::Table t = csv::read(path);
  const std::size_t c_id = t.require_column("sample_id");
  const std::size_t c_label = t.require_column("label");
  std::vector<FeatureVector> out;
  for (const auto& row : t.rows) {
    FeatureVector f;
    f.sample_id = row.fields[c_id];
    const auto label = csv::parse_int(row.fields[c_label], t.source, row.line, "label");
    if (label < 0) throw ParseError(t.source, row.line, "label", "negative class id");
    f.label = static_cast<int>(label);
    for (std::size_t i = 0; i < row.fields.size(); ++i) {
      if (i == c_id || i == c_label) continue;
      f.values.push_back(csv::parse_double(row.fields[i], t.source, row.line, t.header[i]));
    }
    out.push_back(std::move(f));
  }
  return out;
}

std::string assignment_to_csv(const ClusterAssignment& clusters, const ElectrodeLayout& layout) {
  std::ostringstream o;
  o << "channel_id,cluster\n";
  for (std::size_t i = 0; i < clusters.assignment.size(); ++i) {
    o << layout.channels.at(i).id << ',' << clusters.assignment[i] << '\n';
  }
  return o.str();
}

std::string wcss_curve_to_csv(std::span<const double> wcss) {
  std::ostringstream o;
  o << "k,wcss\n";
  for (std::size_t i = 0; i < wcss.size(); ++i) o << i + 1 << ',' << fmt(wcss[i]) << '\n';
  return o.str();
}

std::string raster_to_csv(const SpikeRaster& raster) {
  std::string out;
  out.reserve(raster.rows() * (raster.cols() * 3 + 1));
  for (std::size_t r = 0; r < raster.rows(); ++r) {
    for (std::size_t t = 0; t < raster.cols(); ++t) {
      if (t) out += ',';
      out += std::to_string(static_cast<int>(raster(r, t)));
    }
    out += '\n';
  }
  return out;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xf];
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

OutputLock::OutputLock(const std::filesystem::path& dir) : path_(dir / ".spikebci.lock") {
  std::filesystem::create_directories(dir);
  std::FILE* f = std::fopen(path_.c_str(), "wx");
  if (!f) throw std::runtime_error("output directory " + dir.string() + " is locked by another run (" + path_.string() + ")");
  std::fclose(f);
}

OutputLock::~OutputLock() {
  std::error_code ec;
  std::filesystem::remove(path_, ec);
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

}  // namespace spikebci
