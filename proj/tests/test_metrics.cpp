#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "drgrad/error.hpp"
#include "drgrad/metrics.hpp"
#include "drgrad/rng.hpp"

using namespace drgrad;

namespace {

// O(n^2) pairwise reference: P(s+ > s-) + 1/2 P(tie).
double auc_brute_force(const std::vector<double>& scores,
                       const std::vector<double>& labels) {
  double num = 0.0;
  std::size_t pos = 0, neg = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1.0) continue;
    ++pos;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] == 1.0) continue;
      if (scores[i] > scores[j]) num += 1.0;
      else if (scores[i] == scores[j]) num += 0.5;
    }
  }
  for (double y : labels) neg += (y == 0.0);
  return num / (static_cast<double>(pos) * static_cast<double>(neg));
}

std::filesystem::path temp_file(const std::string& name) {
  const auto path = std::filesystem::temp_directory_path() / ("drgrad_" + name);
  std::filesystem::remove(path);
  return path;
}

}  // namespace

TEST_SUITE_BEGIN("metrics");

TEST_CASE("auc: perfect ranking, tie convention, hand value") {
  CHECK(auc(std::vector<double>{0.2, 0.8}, std::vector<double>{0, 1}) == 1.0);
  CHECK(auc(std::vector<double>{0.5, 0.5}, std::vector<double>{0, 1}) == 0.5);
  CHECK(auc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, std::vector<double>{0, 0, 1, 1}) ==
        doctest::Approx(0.75));
}

TEST_CASE("auc: single class is undefined") {
  CHECK_THROWS_AS(auc(std::vector<double>{0.1, 0.2}, std::vector<double>{1, 1}),
                  NumericError);
  CHECK_THROWS_AS(auc(std::vector<double>{0.1, 0.2}, std::vector<double>{0, 0}),
                  NumericError);
}

TEST_CASE("auc equals brute force exactly, including ties") {
  SeededRng rng(99, "auc");
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.randint(0, 498));
    std::vector<double> scores(n), labels(n);
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < n; ++i) {
      // quantized scores so tie groups actually occur
      scores[i] = static_cast<double>(rng.randint(0, 20)) / 20.0;
      labels[i] = static_cast<double>(rng.randint(0, 1));
      has_pos |= labels[i] == 1.0;
      has_neg |= labels[i] == 0.0;
    }
    if (!has_pos) labels[0] = 1.0;
    if (!has_neg) labels[n - 1] = 0.0;
    CHECK(auc(scores, labels) == auc_brute_force(scores, labels));
  }
}

TEST_CASE("auc: invariant under strictly increasing transforms, flips under negation") {
  SeededRng rng(7, "auc/mono");
  std::vector<double> scores(200), labels(200);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i] = rng.normal(0.0, 1.0);  // continuous, ties have measure zero
    labels[i] = static_cast<double>(rng.randint(0, 1));
  }
  labels[0] = 1.0;
  labels[1] = 0.0;
  const double base = auc(scores, labels);
  std::vector<double> transformed(scores.size()), negated(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    transformed[i] = std::exp(3.0 * scores[i]) + 5.0;
    negated[i] = -scores[i];
  }
  CHECK(auc(transformed, labels) == base);
  CHECK(auc(negated, labels) == doctest::Approx(1.0 - base).epsilon(1e-12));
}

TEST_CASE("telemetry: header-only when empty, one line per record") {
  const auto path = temp_file("telemetry_empty.csv");
  { TelemetryWriter writer(path); }
  std::ifstream in(path);
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 1);

  const auto path3 = temp_file("telemetry_rows.csv");
  {
    TelemetryWriter writer(path3);
    for (int s = 0; s < 3; ++s) {
      RunRecord r;
      r.step = s;
      r.xi_a = 0.125 + s;
      writer.append(r);
    }
  }
  std::ifstream in3(path3);
  lines = 0;
  while (std::getline(in3, line)) ++lines;
  CHECK(lines == 4);
}

TEST_CASE("telemetry: values round-trip at 17 significant digits") {
  const auto path = temp_file("telemetry_roundtrip.csv");
  RunRecord r;
  r.step = 5;
  r.xi_a = 0.12345678901234567;
  r.xi_b = -1.0 / 3.0;
  r.norm_g1p = 1e-17;
  r.mu_p = 2.0 / 3.0;
  r.mu_pp = 1.0 / 3.0;
  {
    TelemetryWriter writer(path);
    writer.append(r);
  }
  const auto records = read_telemetry(path);
  REQUIRE(records.size() == 1);
  CHECK(records[0].step == 5);
  CHECK(records[0].xi_a == r.xi_a);
  CHECK(records[0].xi_b == r.xi_b);
  CHECK(records[0].norm_g1p == r.norm_g1p);
  CHECK(records[0].mu_p == r.mu_p);
}

TEST_CASE("telemetry: rejects non-increasing steps and non-finite values") {
  const auto path = temp_file("telemetry_guard.csv");
  TelemetryWriter writer(path);
  RunRecord r;
  r.step = 3;
  writer.append(r);
  CHECK_THROWS_AS(writer.append(r), NumericError);
  RunRecord bad;
  bad.step = 9;
  bad.xi_a = std::nan("");
  CHECK_THROWS_AS(writer.append(bad), NumericError);
}

TEST_CASE("convergence summary: constant and shrinking series") {
  std::vector<RunRecord> constant(40);
  for (std::size_t i = 0; i < constant.size(); ++i) {
    constant[i].step = static_cast<std::int64_t>(i);
    constant[i].xi_b = -0.4;
    constant[i].norm_g1p = 1.0;
    constant[i].norm_g2 = 3.0;
  }
  const ConvergenceSummary flat = convergence_summary(constant);
  CHECK(flat.first_abs_xi_b == doctest::Approx(flat.last_abs_xi_b));
  CHECK(flat.first_norm_ratio == doctest::Approx(3.0));

  std::vector<RunRecord> shrinking(100);
  for (std::size_t i = 0; i < shrinking.size(); ++i) {
    shrinking[i].step = static_cast<std::int64_t>(i);
    shrinking[i].xi_b = 1.0 - static_cast<double>(i) / 99.0;  // 1 -> 0
    shrinking[i].norm_g1p = 1.0;
    shrinking[i].norm_g2 = 1.0 + shrinking[i].xi_b;
  }
  const ConvergenceSummary down = convergence_summary(shrinking);
  CHECK(down.last_abs_xi_b < down.first_abs_xi_b);
  CHECK(down.last_norm_ratio < down.first_norm_ratio);

  std::vector<RunRecord> brief(10);
  for (std::size_t i = 0; i < brief.size(); ++i) {
    brief[i].step = static_cast<std::int64_t>(i);
  }
  CHECK_THROWS_AS(convergence_summary(brief), NumericError);
}

TEST_CASE("result table: rows, mean rows, exact mean") {
  std::vector<EvalReport> reports;
  for (int mode = 0; mode < 2; ++mode) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      EvalReport r;
      r.mode = mode ? "drgrad" : "mmoe";
      r.seed = seed;
      r.dataset = "synthetic/test";
      r.auc_task1 = 0.9 + 0.001 * static_cast<double>(seed) + 0.01 * mode;
      r.auc_task2 = 0.8;
      reports.push_back(r);
    }
  }
  const ResultTable table = result_table(reports);
  std::size_t lines = 0;
  std::istringstream csv(table.csv);
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(csv, line)) {
    rows.push_back(line);
    ++lines;
  }
  CHECK(lines == 1 + 10 + 2);  // header, per-run rows, per-mode means

  double expected_mean = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    expected_mean += 0.9 + 0.001 * static_cast<double>(seed);
  }
  expected_mean /= 5.0;
  std::string mean_row;
  for (const auto& row : rows) {
    if (row.starts_with("mmoe,mean")) mean_row = row;
  }
  REQUIRE_FALSE(mean_row.empty());
  const std::string value = mean_row.substr(mean_row.find("-,") + 2);
  const double parsed = std::stod(value.substr(0, value.find(',')));
  CHECK(std::abs(parsed - expected_mean) < 1e-12);

  const ResultTable single = result_table({reports[0]});
  std::istringstream single_csv(single.csv);
  lines = 0;
  while (std::getline(single_csv, line)) ++lines;
  CHECK(lines == 3);  // header + row + mean
}

TEST_SUITE_END();
