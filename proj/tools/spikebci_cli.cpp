// spikebci: command line front end for the spike-encoding / convolutional SNN
// / KNN gesture classification pipeline.

#include "spikebci/classifier.hpp"
#include "spikebci/conv_snn.hpp"
#include "spikebci/csv.hpp"
#include "spikebci/errors.hpp"
#include "spikebci/pipeline.hpp"
#include "spikebci/signal_io.hpp"
#include "spikebci/spatial_clustering.hpp"
#include "spikebci/spike_encoding.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace spikebci;

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed_data;
  std::optional<std::uint64_t> seed_cluster;
  std::optional<std::uint64_t> seed_kernel;
  std::optional<std::uint64_t> seed_split;
  std::optional<std::size_t> threads;

  void attach(CLI::App* app) {
    app->add_option("--seed-data", seed_data, "Override seed_data");
    app->add_option("--seed-cluster", seed_cluster, "Override seed_cluster");
    app->add_option("--seed-kernel", seed_kernel, "Override seed_kernel");
    app->add_option("--seed-split", seed_split, "Override seed_split");
    app->add_option("--threads", threads, "Worker threads (0 = all cores)");
  }

  void apply(PipelineConfig& c) const {
    if (seed_data) c.seed_data = *seed_data;
    if (seed_cluster) c.seed_cluster = *seed_cluster;
    if (seed_kernel) c.seed_kernel = *seed_kernel;
    if (seed_split) c.seed_split = *seed_split;
    if (threads) c.threads = *threads;
  }
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void print_nested(const std::exception& e, const std::string& outer = {}) {
  // skip causes the outer message already quotes
  if (outer.empty()) {
    std::cerr << "error: " << e.what() << '\n';
  } else if (outer.find(e.what()) == std::string::npos) {
    std::cerr << "  caused by: " << e.what() << '\n';
  }
  try {
    std::rethrow_if_nested(e);
  } catch (const std::exception& inner) {
    print_nested(inner, e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spikebci - spiking convolutional feature extraction for BCI gesture decoding"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  std::string config_path;
  std::string out;
  Overrides overrides;

  auto add_common = [&](CLI::App* sub, bool need_config = true) {
    auto* opt = sub->add_option("--config", config_path, "Pipeline config file (key = value)");
    if (need_config) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "Output directory (overrides output_dir)");
    overrides.attach(sub);
  };
  auto config = [&] {
    PipelineConfig c = PipelineConfig::load(config_path);
    overrides.apply(c);
    if (!out.empty()) c.output_dir = out;
    c.validate();
    return c;
  };

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic signals/labels/layout CSV set");
  add_common(synth, false);
  SyntheticOptions synth_opts;
  synth->add_option("--classes", synth_opts.n_classes, "Number of classes")->capture_default_str();
  synth->add_option("--channels", synth_opts.n_channels, "Number of channels")->capture_default_str();
  synth->add_option("--blobs", synth_opts.n_blobs, "Spatial electrode blobs")->capture_default_str();
  synth->add_option("--trials", synth_opts.n_trials, "Total trials (class = index mod classes)")->capture_default_str();
  synth->add_option("--window", synth_opts.window_len, "Window length; trials are two windows long")->capture_default_str();
  synth->add_option("--noise", synth_opts.noise, "Gaussian noise std")->capture_default_str();

  // encode
  auto* encode = app.add_subcommand("encode", "Dump the spike raster of one sample as CSV");
  add_common(encode);
  std::size_t sample_index = 0;
  std::string raster_out;
  encode->add_option("--sample", sample_index, "Sample index")->capture_default_str();
  encode->add_option("--raster", raster_out, "Raster CSV path (default <out>/raster.csv, or stdout)");

  auto* cluster = app.add_subcommand("cluster", "Cluster electrodes; write assignment and WCSS curve");
  add_common(cluster);

  auto* features = app.add_subcommand("features", "Extract kernel-weight features for every sample");
  add_common(features);

  auto* train_eval = app.add_subcommand("train-eval", "KNN evaluation of a features CSV");
  add_common(train_eval);
  std::string features_path;
  train_eval->add_option("--features", features_path, "features.csv")->required()->check(CLI::ExistingFile);

  auto* sweep = app.add_subcommand("sweep-clusters", "Accuracy as a function of the cluster count");
  add_common(sweep);
  std::string k_range = "2-8";
  sweep->add_option("--k-range", k_range, "Range 'lo-hi' or list 'a,b,c'")->capture_default_str();

  auto* confusion = app.add_subcommand("confusion", "Render the confusion matrix of a report");
  std::string report_path;
  std::string class_names;
  std::string confusion_out;
  confusion->add_option("--report", report_path, "report.json")->required()->check(CLI::ExistingFile);
  confusion->add_option("--class-names", class_names, "Comma separated names (default: from report)");
  confusion->add_option("--out", confusion_out, "Confusion CSV path");

  auto* run = app.add_subcommand("run", "End-to-end: encode, cluster, features, classify");
  add_common(run);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      if (!config_path.empty()) {
        const PipelineConfig c = config();
        if (c.mode != DataMode::synthetic) throw ParameterError("synth needs a config with mode = synthetic");
        synth_opts.n_classes = c.synth_classes;
        synth_opts.n_channels = c.synth_channels;
        synth_opts.n_blobs = c.synth_blobs;
        synth_opts.n_trials = c.synth_trials;
        synth_opts.window_len = c.window_len;
        synth_opts.noise = c.synth_noise;
        synth_opts.seed = c.seed_data;
        if (out.empty()) out = c.output_dir.string();
      } else if (overrides.seed_data) {
        synth_opts.seed = *overrides.seed_data;
      }
      if (out.empty()) throw ParameterError("synth needs --out or a config output_dir");
      const SyntheticData data = generate_synthetic_trials(synth_opts);
      write_recording(out, data.trials, data.layout);
      std::cout << "wrote " << data.trials.size() << " trials x " << data.layout.size() << " channels to " << out
                << '\n';
      return 0;
    }

    if (confusion->parsed()) {
      std::vector<std::string> names;
      const EvalReport report = report_from_json(read_file(report_path), &names);
      if (!class_names.empty()) names = csv::split(class_names);
      const ConfusionRendering r = report_confusion(report, names);
      if (!confusion_out.empty()) write_text_file(confusion_out, r.csv);
      std::cout << r.text;
      return 0;
    }

    const PipelineConfig c = config();

    if (encode->parsed()) {
      const LabeledDataset ds = load_dataset(c);
      if (sample_index >= ds.samples.size()) {
        throw RangeError("sample " + std::to_string(sample_index) + " out of " + std::to_string(ds.samples.size()));
      }
      const SpikeRaster raster = encode_sample(normalize_sample(ds.samples[sample_index]), c.theta_th);
      const std::string text = raster_to_csv(raster);
      if (!raster_out.empty()) {
        write_text_file(raster_out, text);
      } else if (!out.empty()) {
        write_text_file(fs::path(out) / "raster.csv", text);
      } else {
        std::cout << text;
      }
      std::cerr << "sample " << ds.samples[sample_index].id() << ": " << spike_count(raster) << " spikes\n";
      return 0;
    }

    if (cluster->parsed()) {
      const LabeledDataset ds = load_dataset(c);
      const ClusteringOutcome outcome = compute_clustering(c, ds.layout);
      write_text_file(c.output_dir / "assignment.csv", assignment_to_csv(outcome.clusters, ds.layout));
      if (!outcome.wcss_curve.empty()) {
        write_text_file(c.output_dir / "wcss_curve.csv", wcss_curve_to_csv(outcome.wcss_curve));
      }
      std::cout << "clusters: " << outcome.clusters.n_clusters << " (wcss " << outcome.clusters.wcss << ")\n";
      if (outcome.elbow_k) std::cout << "elbow k: " << outcome.elbow_k << '\n';
      std::cout << "feasible k (all clusters >= 3 channels):";
      for (std::size_t k : outcome.feasible_k) std::cout << ' ' << k;
      std::cout << '\n';
      if (!is_feasible(outcome.clusters)) {
        std::cerr << "warning: selected clustering has a cluster with fewer than 3 channels\n";
        return 2;
      }
      return 0;
    }

    if (features->parsed()) {
      const LabeledDataset ds = load_dataset(c);
      const ClusteringOutcome outcome = compute_clustering(c, ds.layout);
      const auto f = extract_dataset_features(ds, outcome.clusters, c.feature_params(), c.threads);
      write_text_file(c.output_dir / "assignment.csv", assignment_to_csv(outcome.clusters, ds.layout));
      write_text_file(c.output_dir / "features.csv", features_to_csv(f));
      std::cout << "wrote " << f.size() << " feature vectors of length " << (f.empty() ? 0 : f.front().values.size())
                << '\n';
      return 0;
    }

    if (train_eval->parsed()) {
      const auto f = read_features_csv(features_path);
      int max_label = 0;
      for (const auto& v : f) max_label = std::max(max_label, v.label);
      std::vector<std::string> names = c.class_names;
      if (names.empty()) {
        for (int i = 0; i <= max_label; ++i) names.push_back(c.mode == DataMode::synthetic ? "class" + std::to_string(i) : std::to_string(i));
      }
      const RepeatedEvaluation eval = evaluate_features(c, f, names.size());
      write_text_file(c.output_dir / "report.json", report_to_json(eval, c, names));
      const ConfusionRendering r = report_confusion(eval.combined, names);
      write_text_file(c.output_dir / "confusion.csv", r.csv);
      std::cout << r.text << "mean accuracy " << eval.mean_accuracy << " +/- " << eval.std_accuracy << " over "
                << eval.folds.size() << " splits\n";
      return 0;
    }

    if (sweep->parsed()) {
      const auto ks = parse_k_range(k_range);
      const auto rows = sweep_clusters(c, ks);
      write_text_file(c.output_dir / "sweep.csv", sweep_to_csv(rows));
      for (const auto& r : rows) {
        std::cout << "n_c=" << r.n_clusters << ' ';
        if (r.feasible) std::cout << "accuracy " << r.mean_accuracy << " +/- " << r.std_accuracy << '\n';
        else std::cout << "infeasible: " << r.note << '\n';
      }
      return 0;
    }

    if (run->parsed()) {
      const PipelineResult result = run_pipeline(c);
      std::cout << report_confusion(result.evaluation.combined, result.class_names).text << "mean accuracy "
                << result.evaluation.mean_accuracy << " +/- " << result.evaluation.std_accuracy << " over "
                << result.evaluation.folds.size() << " splits; outputs in " << c.output_dir.string() << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    print_nested(e);
    return 1;
  }
  return 0;
}
