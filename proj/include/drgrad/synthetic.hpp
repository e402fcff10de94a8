#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "drgrad/dataset.hpp"
#include "drgrad/rng.hpp"

namespace drgrad {

// Recipe for the two-task dataset with a controlled direction between the
// task labels: label2 = cos_theta * label1 + noise. cos_theta < 0 makes the
// tasks conflict, cos_theta > 0 makes them cooperate.
struct SyntheticSpec {
  std::size_t n_total = 110000;
  std::size_t n_train = 100000;
  std::size_t n_features = 32;
  std::size_t n_sparse = 6;
  double cos_theta = 0.6;  // in (-1,0) or (0,1)
  double noise_mean = 0.01;
  double noise_var = 0.002;
  std::uint64_t seed = 1;
  bool user_id_column = false;  // extra personalized id column, off by default

  void validate() const;
};

// i-th sparse feature value for given draws:
//   x = e^(rand1 * randint1) + (rand2 * randint2)^(i/2 + 1)
double sparse_feature_value(std::size_t i, double rand1, std::int64_t randint1,
                            double rand2, std::int64_t randint2);

// Draws rand(0,1) and randint(1, i+2) twice (independently, inclusive
// bounds) and evaluates the formula above.
double gen_sparse_feature(std::size_t i, SeededRng& rng);

// Raw primary label for one sample's feature vector:
//   10 * (mean_j(4 x_j^2 / |x^2| + 5 e^(x_j / |x|) + 6 sin x_j) + noise)
double synthetic_raw_label1(std::span<const double> x, double noise);

double synthetic_raw_label2(double raw_label1, double cos_theta, double noise);

// Median split computed on the train values and reused for test.
struct BinarizeResult {
  double threshold = 0.0;
  std::vector<double> train;
  std::vector<double> test;
};

BinarizeResult binarize_labels(const std::vector<double>& train_raw,
                               const std::vector<double>& test_raw);

std::pair<LabeledDataset, LabeledDataset> gen_synthetic(const SyntheticSpec& spec);

}  // namespace drgrad
