#include "drgrad/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "drgrad/error.hpp"

namespace drgrad {

void SyntheticSpec::validate() const {
  if (n_total == 0 || n_train == 0 || n_train >= n_total) {
    throw ConfigError("synthetic: need 0 < n_train < n_total");
  }
  if (n_features == 0) throw ConfigError("synthetic: n_features must be positive");
  if (n_sparse > n_features) {
    throw ConfigError("synthetic: n_sparse cannot exceed n_features");
  }
  if (cos_theta == 0.0 || cos_theta <= -1.0 || cos_theta >= 1.0) {
    throw ConfigError("synthetic: cos_theta must lie in (-1,0) or (0,1)");
  }
  if (noise_var < 0.0) throw ConfigError("synthetic: noise variance must be >= 0");
}

double sparse_feature_value(std::size_t i, double rand1, std::int64_t randint1,
                            double rand2, std::int64_t randint2) {
  const double power = static_cast<double>(i) / 2.0 + 1.0;
  return std::exp(rand1 * static_cast<double>(randint1)) +
         std::pow(rand2 * static_cast<double>(randint2), power);
}

double gen_sparse_feature(std::size_t i, SeededRng& rng) {
  const auto hi = static_cast<std::int64_t>(i) + 2;
  const double rand1 = rng.uniform();
  const auto randint1 = rng.randint(1, hi);
  const double rand2 = rng.uniform();
  const auto randint2 = rng.randint(1, hi);
  return sparse_feature_value(i, rand1, randint1, rand2, randint2);
}

double synthetic_raw_label1(std::span<const double> x, double noise) {
  double norm_sq = 0.0;       // |x|^2
  double norm_quad_sq = 0.0;  // |x^2|^2
  for (double v : x) {
    norm_sq += v * v;
    norm_quad_sq += v * v * v * v;
  }
  const double norm = std::sqrt(norm_sq);
  const double norm_quad = std::sqrt(norm_quad_sq);
  double sum = 0.0;
  for (double v : x) {
    const double quad = norm_quad > 0.0 ? 4.0 * v * v / norm_quad : 0.0;
    const double expo = 5.0 * std::exp(norm > 0.0 ? v / norm : 0.0);
    sum += quad + expo + 6.0 * std::sin(v);
  }
  const double mean = sum / static_cast<double>(x.size());
  return 10.0 * (mean + noise);
}

double synthetic_raw_label2(double raw_label1, double cos_theta, double noise) {
  return cos_theta * raw_label1 + noise;
}

namespace {

double median_of(std::vector<double> values) {
  const std::size_t n = values.size();
  std::sort(values.begin(), values.end());
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

BinarizeResult binarize_labels(const std::vector<double>& train_raw,
                               const std::vector<double>& test_raw) {
  if (train_raw.empty()) throw ConfigError("binarize_labels: empty train values");
  const auto [lo, hi] = std::minmax_element(train_raw.begin(), train_raw.end());
  if (*lo == *hi) {
    throw NumericError("binarize_labels: degenerate labels, all train values equal");
  }
  BinarizeResult result;
  result.threshold = median_of(train_raw);
  result.train.reserve(train_raw.size());
  for (double v : train_raw) result.train.push_back(v > result.threshold ? 1.0 : 0.0);
  result.test.reserve(test_raw.size());
  for (double v : test_raw) result.test.push_back(v > result.threshold ? 1.0 : 0.0);
  return result;
}

std::pair<LabeledDataset, LabeledDataset> gen_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  SeededRng rng(spec.seed, "synthetic/data");
  const std::size_t n_dense = spec.n_features - spec.n_sparse;
  const double noise_std = std::sqrt(spec.noise_var);

  DenseMatrix dense(spec.n_total, n_dense);
  std::vector<std::vector<std::int64_t>> sparse(spec.n_sparse);
  for (auto& col : sparse) col.reserve(spec.n_total);
  std::vector<std::int64_t> user_ids;
  std::vector<double> raw1(spec.n_total), raw2(spec.n_total);
  std::vector<double> features(spec.n_features);

  for (std::size_t row = 0; row < spec.n_total; ++row) {
    for (std::size_t j = 0; j < n_dense; ++j) {
      const double v = rng.normal(0.0, 1.0);
      dense(row, j) = v;
      features[j] = v;
    }
    for (std::size_t s = 0; s < spec.n_sparse; ++s) {
      const double raw = gen_sparse_feature(s, rng);
      features[n_dense + s] = raw;
      // Model side consumes the integerized id through bucketed embeddings;
      // label generation above uses the raw value.
      sparse[s].push_back(static_cast<std::int64_t>(std::floor(raw)));
    }
    const double noise1 = rng.normal(spec.noise_mean, noise_std);
    const double noise2 = rng.normal(spec.noise_mean, noise_std);
    raw1[row] = synthetic_raw_label1(features, noise1);
    raw2[row] = synthetic_raw_label2(raw1[row], spec.cos_theta, noise2);
    if (spec.user_id_column) user_ids.push_back(rng.randint(0, 999));
  }

  auto slice = [&](std::size_t begin, std::size_t end, std::string split) {
    LabeledDataset ds;
    ds.split = std::move(split);
    ds.dense = DenseMatrix(end - begin, n_dense);
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t j = 0; j < n_dense; ++j) ds.dense(i - begin, j) = dense(i, j);
    }
    ds.sparse.resize(spec.n_sparse);
    for (std::size_t s = 0; s < spec.n_sparse; ++s) {
      ds.sparse[s].assign(sparse[s].begin() + begin, sparse[s].begin() + end);
    }
    if (spec.user_id_column) {
      ds.user_ids.assign(user_ids.begin() + begin, user_ids.begin() + end);
    }
    ds.raw_label1.assign(raw1.begin() + begin, raw1.begin() + end);
    ds.raw_label2.assign(raw2.begin() + begin, raw2.begin() + end);
    return ds;
  };

  LabeledDataset train = slice(0, spec.n_train, "train");
  LabeledDataset test = slice(spec.n_train, spec.n_total, "test");

  BinarizeResult bin1 = binarize_labels(train.raw_label1, test.raw_label1);
  train.label1 = std::move(bin1.train);
  test.label1 = std::move(bin1.test);
  BinarizeResult bin2 = binarize_labels(train.raw_label2, test.raw_label2);
  train.label2 = std::move(bin2.train);
  test.label2 = std::move(bin2.test);
  return {std::move(train), std::move(test)};
}

}  // namespace drgrad
