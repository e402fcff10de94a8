#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace drgrad {

// Formats a double with 17 significant digits so CSV round-trips bit-exactly.
std::string format_g17(double value);

// Mann-Whitney rank statistic: P(score+ > score-) + 1/2 P(tie), computed via
// one sort with average ranks for tie groups.
double auc(std::span<const double> scores, std::span<const double> labels);

// One telemetry row per training step.
struct RunRecord {
  std::int64_t step = 0;
  double loss_task1 = 0.0;
  double loss_task2 = 0.0;
  double total_loss = 0.0;
  double xi_a = 0.0;
  double xi_b = 0.0;
  double norm_g1p = 0.0;
  double norm_g1pp = 0.0;
  double norm_g2 = 0.0;
  double lambda_a = 0.0;
  double lambda_b = 0.0;
  double mu_p = 0.5;
  double mu_pp = 0.5;
  double norm_gr1p = 0.0;
  double norm_gr1pp = 0.0;

  static const std::array<const char*, 15>& column_names();
  std::array<double, 14> values() const;  // everything after step
};

// Append-only CSV writer; enforces finite values and strictly increasing
// steps.
class TelemetryWriter {
 public:
  explicit TelemetryWriter(const std::filesystem::path& path);
  void append(const RunRecord& record);
  void flush();

 private:
  std::ofstream out_;
  std::int64_t last_step_ = -1;
  bool any_ = false;
};

std::vector<RunRecord> read_telemetry(const std::filesystem::path& path);

// Windowed means over the first and last 10% of steps. The norm ratio per
// step is max(|g2|/|g1p|, |g1p|/|g2|); steps where either norm is zero are
// excluded from the ratio means.
struct ConvergenceSummary {
  double first_abs_xi_a = 0.0;
  double last_abs_xi_a = 0.0;
  double first_abs_xi_b = 0.0;
  double last_abs_xi_b = 0.0;
  double first_norm_ratio = 0.0;
  double last_norm_ratio = 0.0;
};

ConvergenceSummary convergence_summary(const std::vector<RunRecord>& records);

struct EvalReport {
  std::string mode;
  std::uint64_t seed = 0;
  std::string dataset;  // tag, e.g. "synthetic/test"
  double auc_task1 = 0.0;
  double auc_task2 = 0.0;
  double loss_task1 = 0.0;
  double loss_task2 = 0.0;
};

struct ResultTable {
  std::string text;  // aligned, human readable
  std::string csv;
};

// One row per report plus a mean row per mode (in first-seen mode order).
ResultTable result_table(const std::vector<EvalReport>& reports);

}  // namespace drgrad
