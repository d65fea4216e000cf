#include "spikebci/signal_io.hpp"

#include "spikebci/csv.hpp"
#include "spikebci/errors.hpp"
#include "spikebci/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <fstream>
#include <numbers>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

namespace spikebci {

void Trial::validate() const {
  if (!(sample_rate > 0.0)) throw ValidationError("trial " + id + ": sample_rate must be > 0");
  if (signal.rows() == 0 || signal.cols() == 0) {
    throw ValidationError("trial " + id + ": signal must have at least one channel and timestep");
  }
}

std::vector<Vec3> ElectrodeLayout::positions() const {
  std::vector<Vec3> out;
  out.reserve(channels.size());
  for (const auto& e : channels) out.push_back(e.position);
  return out;
}

std::vector<std::string> ElectrodeLayout::ids() const {
  std::vector<std::string> out;
  out.reserve(channels.size());
  for (const auto& e : channels) out.push_back(e.id);
  return out;
}

void ElectrodeLayout::validate() const {
  std::unordered_set<std::string> seen;
  for (const auto& e : channels) {
    if (e.id.empty()) throw ValidationError("layout: empty channel id");
    if (!seen.insert(e.id).second) throw ValidationError("layout: duplicate channel id '" + e.id + "'");
  }
  if (fixed_clusters && fixed_clusters->size() != channels.size()) {
    throw ValidationError("layout: cluster map covers " + std::to_string(fixed_clusters->size()) +
                          " of " + std::to_string(channels.size()) + " channels");
  }
}

void LabeledDataset::validate() const {
  layout.validate();
  for (const auto& s : samples) {
    if (s.signal.rows() != layout.size()) {
      throw ValidationError("sample " + s.id() + ": " + std::to_string(s.signal.rows()) +
                            " channels, layout has " + std::to_string(layout.size()));
    }
    if (s.label < 0 || static_cast<std::size_t>(s.label) >= classes.size()) {
      throw ValidationError("sample " + s.id() + ": label " + std::to_string(s.label) +
                            " is not a valid class index");
    }
  }
}

ElectrodeLayout load_layout(const std::filesystem::path& layout_path) {
  const csv::Table table = csv::read(layout_path);
  const std::size_t c_id = table.require_column("channel_id");
  const std::size_t c_x = table.require_column("x");
  const std::size_t c_y = table.require_column("y");
  const std::size_t c_z = table.require_column("z");
  const std::size_t c_cluster = table.column("cluster");

  ElectrodeLayout layout;
  std::vector<int> clusters;
  for (const auto& row : table.rows) {
    Electrode e;
    e.id = row.fields[c_id];
    if (e.id.empty()) throw ParseError(table.source, row.line, "channel_id", "empty channel id");
    e.position.x = csv::parse_double(row.fields[c_x], table.source, row.line, "x");
    e.position.y = csv::parse_double(row.fields[c_y], table.source, row.line, "y");
    e.position.z = csv::parse_double(row.fields[c_z], table.source, row.line, "z");
    if (c_cluster != std::string::npos) {
      const auto& text = row.fields[c_cluster];
      if (text.empty()) throw ParseError(table.source, row.line, "cluster", "missing cluster label");
      const long long v = csv::parse_int(text, table.source, row.line, "cluster");
      if (v < 0) throw ParseError(table.source, row.line, "cluster", "negative cluster label");
      clusters.push_back(static_cast<int>(v));
    }
    layout.channels.push_back(std::move(e));
  }
  if (c_cluster != std::string::npos) layout.fixed_clusters = std::move(clusters);
  layout.validate();
  return layout;
}

Recording load_trials(const std::filesystem::path& signals_path,
                      const std::filesystem::path& labels_path,
                      const std::filesystem::path& layout_path, double sample_rate,
                      const std::string& subject) {
  if (!(sample_rate > 0.0)) throw ParameterError("sample_rate must be > 0");
  const csv::Table signals = csv::read(signals_path);
  const std::size_t n_channels = signals.header.size();
  const std::size_t n_steps = signals.rows.size();
  if (n_steps == 0) throw ParseError(signals.source, 1, "rows", "no timesteps");

  SignalMatrix recording(n_channels, n_steps);
  for (std::size_t t = 0; t < n_steps; ++t) {
    const auto& row = signals.rows[t];
    for (std::size_t c = 0; c < n_channels; ++c) {
      recording(c, t) = csv::parse_double(row.fields[c], signals.source, row.line, signals.header[c]);
    }
  }

  ElectrodeLayout file_layout = load_layout(layout_path);
  if (file_layout.size() != n_channels) {
    throw ValidationError("channel-count mismatch: " + signals.source + " has " +
                          std::to_string(n_channels) + " channels, " + layout_path.string() +
                          " has " + std::to_string(file_layout.size()));
  }
  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < file_layout.size(); ++i) by_id[file_layout.channels[i].id] = i;
  ElectrodeLayout layout;
  std::vector<int> clusters;
  for (const auto& id : signals.header) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw ValidationError("channel '" + id + "' in " + signals.source + " is missing from " +
                            layout_path.string());
    }
    layout.channels.push_back(file_layout.channels[it->second]);
    if (file_layout.fixed_clusters) clusters.push_back((*file_layout.fixed_clusters)[it->second]);
  }
  if (file_layout.fixed_clusters) layout.fixed_clusters = std::move(clusters);

  const csv::Table labels = csv::read(labels_path);
  const std::size_t c_id = labels.require_column("trial_id");
  const std::size_t c_start = labels.require_column("start_timestep");
  const std::size_t c_end = labels.require_column("end_timestep");
  const std::size_t c_label = labels.require_column("label");

  Recording out;
  out.layout = std::move(layout);
  std::unordered_set<std::string> seen;
  for (const auto& row : labels.rows) {
    const std::string& id = row.fields[c_id];
    if (id.empty()) throw ParseError(labels.source, row.line, "trial_id", "empty trial id");
    if (!seen.insert(id).second) {
      throw ParseError(labels.source, row.line, "trial_id", "duplicate trial id '" + id + "'");
    }
    const long long start = csv::parse_int(row.fields[c_start], labels.source, row.line, "start_timestep");
    const long long end = csv::parse_int(row.fields[c_end], labels.source, row.line, "end_timestep");
    const long long label = csv::parse_int(row.fields[c_label], labels.source, row.line, "label");
    if (label < 0) throw ParseError(labels.source, row.line, "label", "negative class id");
    if (start < 0 || end <= start || static_cast<std::size_t>(end) > n_steps) {
      throw RangeError(labels.source + ":" + std::to_string(row.line) + ": trial '" + id + "' range [" +
                       std::to_string(start) + ", " + std::to_string(end) +
                       ") is outside the recording of " + std::to_string(n_steps) + " timesteps");
    }
    Trial trial;
    trial.id = id;
    trial.label = static_cast<int>(label);
    trial.sample_rate = sample_rate;
    trial.subject = subject;
    const auto len = static_cast<std::size_t>(end - start);
    trial.signal = SignalMatrix(n_channels, len);
    for (std::size_t c = 0; c < n_channels; ++c) {
      const auto src = recording.row(c).subspan(static_cast<std::size_t>(start), len);
      std::copy(src.begin(), src.end(), trial.signal.row(c).begin());
    }
    out.trials.push_back(std::move(trial));
  }
  return out;
}

void write_recording(const std::filesystem::path& dir, std::span<const Trial> trials,
                     const ElectrodeLayout& layout) {
  layout.validate();
  std::filesystem::create_directories(dir);
  const std::size_t n_channels = layout.size();

  std::ofstream sig(dir / "signals.csv", std::ios::binary);
  std::ofstream lab(dir / "labels.csv", std::ios::binary);
  std::ofstream lay(dir / "layout.csv", std::ios::binary);
  if (!sig || !lab || !lay) throw ValidationError("cannot write recording into " + dir.string());

  for (std::size_t c = 0; c < n_channels; ++c) sig << (c ? "," : "") << layout.channels[c].id;
  sig << '\n';
  lab << "trial_id,start_timestep,end_timestep,label\n";
  std::size_t offset = 0;
  for (const auto& trial : trials) {
    if (trial.signal.rows() != n_channels) {
      throw ValidationError("trial " + trial.id + " channel count does not match layout");
    }
    for (std::size_t t = 0; t < trial.signal.cols(); ++t) {
      for (std::size_t c = 0; c < n_channels; ++c) {
        sig << (c ? "," : "") << csv::format_double(trial.signal(c, t));
      }
      sig << '\n';
    }
    lab << trial.id << ',' << offset << ',' << offset + trial.signal.cols() << ',' << trial.label << '\n';
    offset += trial.signal.cols();
  }

  lay << "channel_id,x,y,z" << (layout.fixed_clusters ? ",cluster" : "") << '\n';
  for (std::size_t c = 0; c < n_channels; ++c) {
    const auto& e = layout.channels[c];
    lay << e.id << ',' << csv::format_double(e.position.x) << ',' << csv::format_double(e.position.y)
        << ',' << csv::format_double(e.position.z);
    if (layout.fixed_clusters) lay << ',' << (*layout.fixed_clusters)[c];
    lay << '\n';
  }
}

SegmentResult segment_trials(std::span<const Trial> trials, std::size_t window_len) {
  if (window_len == 0) throw ParameterError("window_len must be >= 1");
  SegmentResult out;
  for (const auto& trial : trials) {
    const std::size_t n_windows = trial.signal.cols() / window_len;
    if (n_windows == 0) {
      ++out.skipped;
      continue;
    }
    for (std::size_t w = 0; w < n_windows; ++w) {
      Sample s;
      s.label = trial.label;
      s.trial_id = trial.id;
      s.window_index = w;
      s.signal = SignalMatrix(trial.signal.rows(), window_len);
      for (std::size_t c = 0; c < trial.signal.rows(); ++c) {
        const auto src = trial.signal.row(c).subspan(w * window_len, window_len);
        std::copy(src.begin(), src.end(), s.signal.row(c).begin());
      }
      out.samples.push_back(std::move(s));
    }
  }
  return out;
}

void normalize_channel(std::span<double> channel) {
  if (channel.empty()) return;
  for (double x : channel) {
    if (!std::isfinite(x)) throw ValidationError("cannot normalize a channel with non-finite values");
  }
  const auto [lo_it, hi_it] = std::minmax_element(channel.begin(), channel.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) {
    std::fill(channel.begin(), channel.end(), 0.0);
    return;
  }
  // (2x - (hi + lo)) / (hi - lo) is exact when lo = -1, hi = 1, which makes a
  // second pass the identity.
  const double mid2 = hi + lo;
  const double range = hi - lo;
  for (double& x : channel) {
    if (x == lo) {
      x = -1.0;
    } else if (x == hi) {
      x = 1.0;
    } else {
      x = std::clamp((2.0 * x - mid2) / range, -1.0, 1.0);
    }
  }
}

Sample normalize_sample(Sample sample) {
  for (std::size_t c = 0; c < sample.signal.rows(); ++c) normalize_channel(sample.signal.row(c));
  return sample;
}

ElectrodeLayout make_blob_layout(std::size_t n_channels, std::size_t n_blobs, double separation,
                                 double radius, std::uint64_t seed) {
  if (n_blobs == 0 || n_blobs > n_channels) {
    throw ParameterError("n_blobs must be in [1, n_channels]");
  }
  if (!(separation > 0.0) || !(radius >= 0.0)) {
    throw ParameterError("separation must be > 0 and radius >= 0");
  }
  Rng rng(seed);
  // Blob centres are spread evenly over a sphere (random start, then Coulomb
  // repulsion), then scaled so the closest pair sits exactly `separation`
  // apart. Random placement in a box often leaves one pair much closer than
  // the rest, and the WCSS knee then lands one k early.
  std::vector<Vec3> centres(n_blobs);
  for (auto& c : centres) {
    do {
      c = {rng.normal(), rng.normal(), rng.normal()};
    } while (squared_distance(c, {}) < 1e-12);
  }
  const auto project = [](Vec3& c) {
    const double n = std::sqrt(squared_distance(c, {}));
    c = {c.x / n, c.y / n, c.z / n};
  };
  for (auto& c : centres) project(c);
  for (int iter = 0; iter < 500 && n_blobs > 1; ++iter) {
    std::vector<Vec3> next = centres;
    for (std::size_t i = 0; i < n_blobs; ++i) {
      Vec3 f{};
      for (std::size_t j = 0; j < n_blobs; ++j) {
        if (i == j) continue;
        const Vec3 d{centres[i].x - centres[j].x, centres[i].y - centres[j].y, centres[i].z - centres[j].z};
        const double r2 = std::max(squared_distance(d, {}), 1e-9);
        const double w = 1.0 / (r2 * std::sqrt(r2));
        f = {f.x + w * d.x, f.y + w * d.y, f.z + w * d.z};
      }
      const double step = 0.05 / static_cast<double>(n_blobs);
      next[i] = {centres[i].x + step * f.x, centres[i].y + step * f.y, centres[i].z + step * f.z};
      project(next[i]);
    }
    centres = std::move(next);
  }
  double closest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n_blobs; ++i)
    for (std::size_t j = i + 1; j < n_blobs; ++j) closest = std::min(closest, squared_distance(centres[i], centres[j]));
  const double scale = n_blobs > 1 ? separation / std::sqrt(closest) : 0.0;
  for (auto& c : centres) c = {scale * c.x, scale * c.y, scale * c.z};

  ElectrodeLayout layout;
  for (std::size_t i = 0; i < n_channels; ++i) {
    const Vec3& c = centres[i * n_blobs / n_channels];
    Vec3 offset;
    do {
      offset = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    } while (squared_distance(offset, {}) > 1.0);
    layout.channels.push_back(
        {"ch" + std::to_string(i),
         {c.x + radius * offset.x, c.y + radius * offset.y, c.z + radius * offset.z}});
  }
  return layout;
}

namespace {

constexpr double kLowestHz = 2.0;
constexpr double kHighestHz = 24.0;
constexpr std::size_t kComponents = 2;

struct ClassTable {
  // freq[class][blob][component], phase[class][channel][component]
  std::vector<std::vector<std::array<double, kComponents>>> freq;
  std::vector<std::vector<std::array<double, kComponents>>> phase;
};

ClassTable make_class_table(const SyntheticOptions& o) {
  Rng rng(derive_seed(o.seed, {0x7ab1e}));
  std::vector<double> ladder(o.n_classes);
  for (std::size_t i = 0; i < o.n_classes; ++i) {
    const double f = o.n_classes == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(o.n_classes - 1);
    ladder[i] = kLowestHz * std::pow(kHighestHz / kLowestHz, f);
  }
  ClassTable table;
  table.freq.assign(o.n_classes, std::vector<std::array<double, kComponents>>(o.n_blobs));
  for (std::size_t b = 0; b < o.n_blobs; ++b) {
    for (std::size_t m = 0; m < kComponents; ++m) {
      std::vector<std::size_t> perm(o.n_classes);
      std::iota(perm.begin(), perm.end(), 0);
      rng.shuffle(std::span<std::size_t>(perm));
      for (std::size_t c = 0; c < o.n_classes; ++c) table.freq[c][b][m] = ladder[perm[c]];
    }
  }
  table.phase.assign(o.n_classes, std::vector<std::array<double, kComponents>>(o.n_channels));
  for (auto& per_class : table.phase) {
    for (auto& per_channel : per_class) {
      for (double& p : per_channel) p = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
  }
  return table;
}

void check_synthetic(const SyntheticOptions& o) {
  if (o.n_classes < 2) throw ParameterError("synthetic data needs n_classes >= 2");
  if (o.n_channels < 3) throw ParameterError("synthetic data needs n_channels >= 3");
  if (o.n_blobs < 1 || o.n_blobs > o.n_channels) throw ParameterError("n_blobs must be in [1, n_channels]");
  if (o.n_trials < 1) throw ParameterError("synthetic data needs n_trials >= 1");
  if (o.window_len < 1) throw ParameterError("window_len must be >= 1");
  if (!(o.sample_rate > 0.0)) throw ParameterError("sample_rate must be > 0");
  if (!(o.noise >= 0.0) || !std::isfinite(o.noise)) throw ParameterError("noise must be finite and >= 0");
}

}  // namespace

SyntheticData generate_synthetic_trials(const SyntheticOptions& o) {
  check_synthetic(o);
  const ClassTable table = make_class_table(o);
  SyntheticData out;
  out.layout = make_blob_layout(o.n_channels, o.n_blobs, 20.0, 1.0, derive_seed(o.seed, {0x1a7}));
  for (std::size_t c = 0; c < o.n_classes; ++c) out.classes.push_back("class" + std::to_string(c));

  const std::size_t len = 2 * o.window_len;
  for (std::size_t i = 0; i < o.n_trials; ++i) {
    const std::size_t cls = i % o.n_classes;
    const std::size_t rep = i / o.n_classes;
    Trial trial;
    trial.id = "t" + std::to_string(i);
    trial.label = static_cast<int>(cls);
    trial.sample_rate = o.sample_rate;
    trial.subject = "synthetic";
    trial.signal = SignalMatrix(o.n_channels, len);
    Rng noise(derive_seed(o.seed, {cls, rep}));
    for (std::size_t ch = 0; ch < o.n_channels; ++ch) {
      const std::size_t blob = ch * o.n_blobs / o.n_channels;
      const auto& f = table.freq[cls][blob];
      const auto& ph = table.phase[cls][ch];
      auto row = trial.signal.row(ch);
      for (std::size_t t = 0; t < len; ++t) {
        const double time = static_cast<double>(t) / o.sample_rate;
        double v = std::sin(2.0 * std::numbers::pi * f[0] * time + ph[0]) +
                   0.5 * std::sin(2.0 * std::numbers::pi * f[1] * time + ph[1]);
        if (o.noise > 0.0) v += o.noise * noise.normal();
        row[t] = v;
      }
    }
    out.trials.push_back(std::move(trial));
  }
  return out;
}

LabeledDataset generate_synthetic(const SyntheticOptions& options) {
  SyntheticData data = generate_synthetic_trials(options);
  LabeledDataset ds;
  ds.samples = segment_trials(data.trials, options.window_len).samples;
  ds.classes = std::move(data.classes);
  ds.layout = std::move(data.layout);
  return ds;
}

LabeledDataset generate_synthetic(std::size_t n_classes, std::size_t n_channels,
                                  std::size_t n_trials_per_class, std::size_t window_len,
                                  std::uint64_t seed) {
  SyntheticOptions o;
  o.n_classes = n_classes;
  o.n_channels = n_channels;
  o.n_blobs = std::min<std::size_t>(5, n_channels);
  o.n_trials = n_classes * n_trials_per_class;
  o.window_len = window_len;
  o.seed = seed;
  return generate_synthetic(o);
}

}  // namespace spikebci
