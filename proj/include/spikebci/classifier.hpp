#pragma once

#include "spikebci/conv_snn.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace spikebci {

struct Split {
  std::vector<FeatureVector> train;
  std::vector<FeatureVector> test;
  std::vector<int> singleton_classes;  // classes with one sample, kept in train only
  std::uint64_t seed{0};
};

// Stratified per class and deterministic in `seed`. Each class with n >= 2
// samples sends round(n * train_fraction) to train, clamped to [1, n - 1].
// Partitions keep the input order.
Split split_dataset(std::span<const FeatureVector> features, double train_fraction, std::uint64_t seed);

class KnnModel {
 public:
  KnnModel(std::vector<FeatureVector> training, std::size_t k);

  // Majority vote of the k nearest training vectors (Euclidean). Equal
  // distances rank the lower training index first. Vote ties go to the
  // class whose voters have the smaller summed distance, then to the lower
  // class id.
  int predict(std::span<const double> query) const;

  std::size_t k() const { return k_; }
  std::size_t size() const { return training_.size(); }
  std::size_t dimension() const { return dimension_; }

 private:
  std::vector<FeatureVector> training_;
  std::size_t k_;
  std::size_t dimension_;
};

inline int knn_predict(const KnnModel& model, std::span<const double> query) {
  return model.predict(query);
}

struct EvalReport {
  double accuracy{0.0};
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  std::vector<double> precision;  // NaN-free: 0 when a class is never predicted
  std::vector<double> recall;     // 0 when a class has no test samples
  std::uint64_t split_seed{0};
  std::size_t fold{0};

  std::size_t total() const;
};

// n_classes == 0 infers the class count from the largest label seen.
EvalReport evaluate(std::span<const FeatureVector> train, std::span<const FeatureVector> test,
                    std::size_t k, std::size_t n_classes = 0);

// Counts summed over the folds; accuracy etc. derived from the summed matrix.
EvalReport combine_reports(std::span<const EvalReport> folds);

struct RepeatedEvaluation {
  std::vector<EvalReport> folds;
  EvalReport combined;
  double mean_accuracy{0.0};
  double std_accuracy{0.0};  // population std over folds
};

// `repeats` stratified splits with seeds derived from (seed, fold).
RepeatedEvaluation evaluate_repeated(std::span<const FeatureVector> features, std::size_t k,
                                     std::size_t n_classes, double train_fraction, std::uint64_t seed,
                                     std::size_t repeats);

}  // namespace spikebci
