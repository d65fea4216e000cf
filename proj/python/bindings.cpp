#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "spikebci/classifier.hpp"
#include "spikebci/conv_snn.hpp"
#include "spikebci/errors.hpp"
#include "spikebci/pipeline.hpp"
#include "spikebci/signal_io.hpp"
#include "spikebci/spatial_clustering.hpp"
#include "spikebci/spike_encoding.hpp"

#include <string>
#include <vector>

namespace py = pybind11;
using namespace spikebci;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using SpikeArray = py::array_t<std::int8_t, py::array::c_style | py::array::forcecast>;

SignalMatrix to_matrix(const DoubleArray& a) {
  if (a.ndim() != 2) throw ParameterError("expected a 2-D array [channels, timesteps]");
  SignalMatrix m(a.shape(0), a.shape(1));
  std::copy(a.data(), a.data() + a.size(), m.values().begin());
  return m;
}

SpikeRaster to_raster(const SpikeArray& a) {
  if (a.ndim() != 2) throw ParameterError("expected a 2-D spike array [channels, timesteps]");
  SpikeRaster r(a.shape(0), a.shape(1));
  std::copy(a.data(), a.data() + a.size(), r.values().begin());
  return r;
}

template <typename T>
py::array_t<T> from_grid(const Grid<T>& g) {
  py::array_t<T> out({g.rows(), g.cols()});
  std::copy(g.values().begin(), g.values().end(), out.mutable_data());
  return out;
}

template <typename T>
py::array_t<T> from_vector(const std::vector<T>& v) {
  py::array_t<T> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

std::vector<Vec3> to_positions(const DoubleArray& a) {
  if (a.ndim() != 2 || a.shape(1) != 3) throw ParameterError("positions must have shape [n, 3]");
  std::vector<Vec3> out(a.shape(0));
  auto v = a.unchecked<2>();
  for (py::ssize_t i = 0; i < a.shape(0); ++i) out[i] = {v(i, 0), v(i, 1), v(i, 2)};
  return out;
}

ClusterAssignment to_clusters(const std::vector<std::size_t>& assignment) {
  ClusterAssignment a;
  a.assignment = assignment;
  for (auto c : assignment) a.n_clusters = std::max(a.n_clusters, c + 1);
  a.centroids.resize(a.n_clusters);
  return a;
}

std::vector<FeatureVector> to_features(const DoubleArray& x, const std::vector<int>& labels) {
  if (x.ndim() != 2) throw ParameterError("features must be a 2-D array [samples, dims]");
  if (static_cast<std::size_t>(x.shape(0)) != labels.size()) throw ParameterError("one label per row required");
  std::vector<FeatureVector> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out[i].values.assign(x.data(i, 0), x.data(i, 0) + x.shape(1));
    out[i].label = labels[i];
    out[i].sample_id = std::to_string(i);
  }
  return out;
}

py::dict report_dict(const EvalReport& r) {
  py::dict d;
  d["accuracy"] = r.accuracy;
  d["confusion"] = r.confusion;
  d["precision"] = r.precision;
  d["recall"] = r.recall;
  return d;
}

}  // namespace

PYBIND11_MODULE(_spikebci, m) {
  m.doc() = "Spike encoding, electrode clustering, convolutional SNN features and KNN evaluation.";
  m.attr("__version__") = std::string(kVersion);

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<TopologyError>(m, "TopologyError", PyExc_ValueError);
  py::register_exception<ContractError>(m, "ContractError", PyExc_RuntimeError);

  m.def("encode",
        [](const DoubleArray& signal, double threshold) {
          if (signal.ndim() != 1) throw ParameterError("expected a 1-D signal");
          return from_vector(encode_channel(std::span<const double>(signal.data(), signal.size()), threshold));
        },
        py::arg("signal"), py::arg("threshold"),
        "Temporal-contrast spikes (-1, 0, +1) of one channel.");

  m.def("encode_signal",
        [](const DoubleArray& signal, double threshold) { return from_grid(encode_signal(to_matrix(signal), threshold)); },
        py::arg("signal"), py::arg("threshold"));

  m.def("normalize",
        [](const DoubleArray& signal) {
          SignalMatrix s = to_matrix(signal);
          for (std::size_t c = 0; c < s.rows(); ++c) normalize_channel(s.row(c));
          return from_grid(s);
        },
        py::arg("signal"), "Per-channel min-max scaling to [-1, 1].");

  m.def("kmeans",
        [](const DoubleArray& positions, std::size_t k, std::uint64_t seed) {
          const ClusterAssignment a = kmeans(to_positions(positions), k, seed);
          py::array_t<double> centroids({a.centroids.size(), std::size_t{3}});
          auto c = centroids.mutable_unchecked<2>();
          for (std::size_t i = 0; i < a.centroids.size(); ++i) {
            c(i, 0) = a.centroids[i].x;
            c(i, 1) = a.centroids[i].y;
            c(i, 2) = a.centroids[i].z;
          }
          py::dict d;
          d["assignment"] = a.assignment;
          d["centroids"] = centroids;
          d["wcss"] = a.wcss;
          return d;
        },
        py::arg("positions"), py::arg("k"), py::arg("seed") = 0);

  m.def("elbow_select",
        [](const DoubleArray& positions, std::size_t k_max, std::uint64_t seed) {
          const ElbowResult e = elbow_select(to_positions(positions), k_max, seed);
          return py::make_tuple(e.selected_k, e.wcss);
        },
        py::arg("positions"), py::arg("k_max"), py::arg("seed") = 0,
        "Returns (selected k, wcss for k = 1..k_max).");

  m.def("feature_length", &feature_length, py::arg("n_channels"), py::arg("n_clusters"));
  m.def("plasticity_magnitude", &plasticity_magnitude, py::arg("input_spike"), py::arg("lag"), py::arg("tau_r"));
  m.def("initial_weights", [](std::uint64_t seed) { return draw_initial_weights(seed); }, py::arg("seed"));

  m.def("extract_features",
        [](const SpikeArray& raster, const std::vector<std::size_t>& assignment, std::uint64_t kernel_seed,
           double theta_conv, double tau_r, std::size_t temporal_stride) {
          const FeatureVector f = extract_features(to_raster(raster), to_clusters(assignment), kernel_seed,
                                                   {tau_r, temporal_stride, 1}, theta_conv);
          return from_vector(f.values);
        },
        py::arg("raster"), py::arg("assignment"), py::arg("kernel_seed"), py::arg("theta_conv") = 0.1,
        py::arg("tau_r") = 5.0, py::arg("temporal_stride") = 3,
        "Final kernel weights after one pass of the convolutional SNN over a spike raster.");

  m.def("generate_synthetic",
        [](std::size_t n_classes, std::size_t n_channels, std::size_t n_trials_per_class, std::size_t window_len,
           std::uint64_t seed) {
          const LabeledDataset ds = generate_synthetic(n_classes, n_channels, n_trials_per_class, window_len, seed);
          py::array_t<double> signals({ds.samples.size(), n_channels, window_len});
          std::vector<int> labels;
          double* out = signals.mutable_data();
          for (const auto& s : ds.samples) {
            out = std::copy(s.signal.values().begin(), s.signal.values().end(), out);
            labels.push_back(s.label);
          }
          const auto pos = ds.layout.positions();
          py::array_t<double> positions({pos.size(), std::size_t{3}});
          auto p = positions.mutable_unchecked<2>();
          for (std::size_t i = 0; i < pos.size(); ++i) {
            p(i, 0) = pos[i].x;
            p(i, 1) = pos[i].y;
            p(i, 2) = pos[i].z;
          }
          py::dict d;
          d["signals"] = signals;
          d["labels"] = labels;
          d["positions"] = positions;
          d["classes"] = ds.classes;
          return d;
        },
        py::arg("n_classes"), py::arg("n_channels"), py::arg("n_trials_per_class"), py::arg("window_len"),
        py::arg("seed"));

  m.def("knn_predict",
        [](const DoubleArray& train, const std::vector<int>& labels, const DoubleArray& query, std::size_t k) {
          const KnnModel model(to_features(train, labels), k);
          if (query.ndim() != 2) throw ParameterError("query must be a 2-D array");
          std::vector<int> out;
          for (py::ssize_t i = 0; i < query.shape(0); ++i)
            out.push_back(model.predict(std::span<const double>(query.data(i, 0), query.shape(1))));
          return out;
        },
        py::arg("train"), py::arg("labels"), py::arg("query"), py::arg("k"));

  m.def("evaluate_repeated",
        [](const DoubleArray& features, const std::vector<int>& labels, std::size_t k, double train_fraction,
           std::uint64_t seed, std::size_t repeats) {
          const RepeatedEvaluation r =
              evaluate_repeated(to_features(features, labels), k, 0, train_fraction, seed, repeats);
          py::dict d;
          d["mean_accuracy"] = r.mean_accuracy;
          d["std_accuracy"] = r.std_accuracy;
          d["combined"] = report_dict(r.combined);
          py::list folds;
          for (const auto& f : r.folds) folds.append(report_dict(f));
          d["folds"] = folds;
          return d;
        },
        py::arg("features"), py::arg("labels"), py::arg("k") = 5, py::arg("train_fraction") = 0.8,
        py::arg("seed") = 0, py::arg("repeats") = 5);

  m.def("run_pipeline",
        [](const std::filesystem::path& config, std::optional<std::filesystem::path> out) {
          PipelineResult r;
          {
            py::gil_scoped_release release;
            const PipelineConfig c = PipelineConfig::load(config);
            r = run_pipeline(c, out);
          }
          py::dict d;
          d["mean_accuracy"] = r.evaluation.mean_accuracy;
          d["std_accuracy"] = r.evaluation.std_accuracy;
          d["n_clusters"] = r.clustering.clusters.n_clusters;
          d["class_names"] = r.class_names;
          d["confusion"] = r.evaluation.combined.confusion;
          d["output_hashes"] = r.manifest.output_hashes;
          return d;
        },
        py::arg("config"), py::arg("out") = py::none(), "Runs every stage from a config file and writes outputs.");
}
