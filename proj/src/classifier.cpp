#include "spikebci/classifier.hpp"

#include "spikebci/errors.hpp"
#include "spikebci/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace spikebci {

Split split_dataset(std::span<const FeatureVector> features, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ParameterError("train_fraction must lie strictly between 0 and 1");
  }
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < features.size(); ++i) by_class[features[i].label].push_back(i);

  std::vector<char> in_train(features.size(), 0);
  Split out;
  out.seed = seed;
  for (auto& [label, idx] : by_class) {
    if (idx.size() == 1) {
      out.singleton_classes.push_back(label);
      in_train[idx[0]] = 1;
      continue;
    }
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(static_cast<std::int64_t>(label))}));
    rng.shuffle(std::span<std::size_t>(idx));
    const auto n = static_cast<double>(idx.size());
    auto n_train = static_cast<std::size_t>(std::llround(n * train_fraction));
    n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
    for (std::size_t j = 0; j < n_train; ++j) in_train[idx[j]] = 1;
  }
  for (std::size_t i = 0; i < features.size(); ++i) {
    (in_train[i] ? out.train : out.test).push_back(features[i]);
  }
  return out;
}

KnnModel::KnnModel(std::vector<FeatureVector> training, std::size_t k)
    : training_(std::move(training)), k_(k), dimension_(0) {
  if (training_.empty()) throw ParameterError("KNN needs at least one training vector");
  if (k_ < 1 || k_ > training_.size()) {
    throw ParameterError("KNN k = " + std::to_string(k_) + " must lie in [1, " +
                         std::to_string(training_.size()) + "]");
  }
  dimension_ = training_.front().values.size();
  for (const auto& v : training_) {
    if (v.values.size() != dimension_) throw ValidationError("training vectors differ in dimension");
    if (v.label < 0) throw ValidationError("negative training label");
  }
}

int KnnModel::predict(std::span<const double> query) const {
  if (query.size() != dimension_) {
    throw ValidationError("query dimension " + std::to_string(query.size()) + " != model dimension " +
                          std::to_string(dimension_));
  }
  std::vector<std::pair<double, std::size_t>> dist(training_.size());
  for (std::size_t i = 0; i < training_.size(); ++i) {
    double d2 = 0.0;
    const auto& v = training_[i].values;
    for (std::size_t j = 0; j < dimension_; ++j) {
      const double d = v[j] - query[j];
      d2 += d * d;
    }
    dist[i] = {d2, i};
  }
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_), dist.end());

  std::map<int, std::pair<std::size_t, double>> votes;  // label -> (count, summed distance)
  for (std::size_t j = 0; j < k_; ++j) {
    auto& v = votes[training_[dist[j].second].label];
    ++v.first;
    v.second += std::sqrt(dist[j].first);
  }
  int best = -1;
  std::pair<std::size_t, double> best_vote{0, 0.0};
  for (const auto& [label, vote] : votes) {  // ascending label
    if (best < 0 || vote.first > best_vote.first ||
        (vote.first == best_vote.first && vote.second < best_vote.second)) {
      best = label;
      best_vote = vote;
    }
  }
  return best;
}

std::size_t EvalReport::total() const {
  std::size_t n = 0;
  for (const auto& row : confusion) n = std::accumulate(row.begin(), row.end(), n);
  return n;
}

namespace {

void fill_metrics(EvalReport& r) {
  const std::size_t n = r.confusion.size();
  std::size_t trace = 0;
  r.precision.assign(n, 0.0);
  r.recall.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    trace += r.confusion[i][i];
    std::size_t row = 0;
    std::size_t col = 0;
    for (std::size_t j = 0; j < n; ++j) {
      row += r.confusion[i][j];
      col += r.confusion[j][i];
    }
    if (row) r.recall[i] = static_cast<double>(r.confusion[i][i]) / static_cast<double>(row);
    if (col) r.precision[i] = static_cast<double>(r.confusion[i][i]) / static_cast<double>(col);
  }
  const std::size_t total = r.total();
  r.accuracy = total ? static_cast<double>(trace) / static_cast<double>(total) : 0.0;
}

}  // namespace

EvalReport evaluate(std::span<const FeatureVector> train, std::span<const FeatureVector> test,
                    std::size_t k, std::size_t n_classes) {
  if (train.empty() || test.empty()) throw ParameterError("evaluate needs non-empty train and test sets");
  const KnnModel model(std::vector<FeatureVector>(train.begin(), train.end()), k);
  int max_label = 0;
  for (const auto& v : train) max_label = std::max(max_label, v.label);
  for (const auto& v : test) {
    if (v.label < 0) throw ValidationError("negative test label");
    max_label = std::max(max_label, v.label);
  }
  if (n_classes == 0) n_classes = static_cast<std::size_t>(max_label) + 1;
  if (static_cast<std::size_t>(max_label) >= n_classes) {
    throw ValidationError("label " + std::to_string(max_label) + " outside " + std::to_string(n_classes) +
                          " classes");
  }
  EvalReport r;
  r.confusion.assign(n_classes, std::vector<std::size_t>(n_classes, 0));
  for (const auto& v : test) {
    const int predicted = model.predict(v.values);
    ++r.confusion[static_cast<std::size_t>(v.label)][static_cast<std::size_t>(predicted)];
  }
  fill_metrics(r);
  return r;
}

EvalReport combine_reports(std::span<const EvalReport> folds) {
  EvalReport out;
  if (folds.empty()) return out;
  const std::size_t n = folds.front().confusion.size();
  out.confusion.assign(n, std::vector<std::size_t>(n, 0));
  for (const auto& f : folds) {
    if (f.confusion.size() != n) throw ValidationError("folds disagree on class count");
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) out.confusion[i][j] += f.confusion[i][j];
    }
  }
  out.split_seed = folds.front().split_seed;
  fill_metrics(out);
  return out;
}

RepeatedEvaluation evaluate_repeated(std::span<const FeatureVector> features, std::size_t k,
                                     std::size_t n_classes, double train_fraction, std::uint64_t seed,
                                     std::size_t repeats) {
  if (repeats < 1) throw ParameterError("split repeats must be >= 1");
  RepeatedEvaluation out;
  for (std::size_t fold = 0; fold < repeats; ++fold) {
    const std::uint64_t fold_seed = derive_seed(seed, {fold});
    const Split split = split_dataset(features, train_fraction, fold_seed);
    EvalReport r = evaluate(split.train, split.test, k, n_classes);
    r.split_seed = fold_seed;
    r.fold = fold;
    out.folds.push_back(std::move(r));
  }
  double sum = 0.0;
  for (const auto& f : out.folds) sum += f.accuracy;
  out.mean_accuracy = sum / static_cast<double>(repeats);
  double var = 0.0;
  for (const auto& f : out.folds) var += (f.accuracy - out.mean_accuracy) * (f.accuracy - out.mean_accuracy);
  out.std_accuracy = std::sqrt(var / static_cast<double>(repeats));
  out.combined = combine_reports(out.folds);
  return out;
}

}  // namespace spikebci
