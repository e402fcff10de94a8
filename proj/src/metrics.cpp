#include "drgrad/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "drgrad/error.hpp"

namespace drgrad {

std::string format_g17(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

double auc(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) throw ShapeError("auc: length mismatch");
  const std::size_t n = scores.size();
  std::size_t num_pos = 0;
  for (double y : labels) {
    if (y != 0.0 && y != 1.0) throw NumericError("auc: labels must be 0 or 1");
    if (y == 1.0) ++num_pos;
  }
  const std::size_t num_neg = n - num_pos;
  if (num_pos == 0 || num_neg == 0) {
    throw NumericError("auc: undefined, needs at least one positive and one negative");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double positive_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // 1-based average rank of the tie group [i, j)
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1.0) positive_rank_sum += avg_rank;
    }
    i = j;
  }
  const double num =
      positive_rank_sum -
      0.5 * static_cast<double>(num_pos) * static_cast<double>(num_pos + 1);
  return num / (static_cast<double>(num_pos) * static_cast<double>(num_neg));
}

const std::array<const char*, 15>& RunRecord::column_names() {
  static const std::array<const char*, 15> names = {
      "step",      "loss_task1", "loss_task2", "total_loss", "xi_a",
      "xi_b",      "norm_g1p",   "norm_g1pp",  "norm_g2",    "lambda_a",
      "lambda_b",  "mu_p",       "mu_pp",      "norm_gr1p",  "norm_gr1pp"};
  return names;
}

std::array<double, 14> RunRecord::values() const {
  return {loss_task1, loss_task2, total_loss, xi_a,     xi_b,
          norm_g1p,   norm_g1pp,  norm_g2,    lambda_a, lambda_b,
          mu_p,       mu_pp,      norm_gr1p,  norm_gr1pp};
}

TelemetryWriter::TelemetryWriter(const std::filesystem::path& path) : out_(path) {
  if (!out_) throw IoError("cannot open telemetry file: " + path.string());
  const auto& names = RunRecord::column_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    out_ << (i ? "," : "") << names[i];
  }
  out_ << "\n";
}

void TelemetryWriter::append(const RunRecord& record) {
  if (any_ && record.step <= last_step_) {
    throw NumericError("telemetry: steps must be strictly increasing");
  }
  for (double v : record.values()) {
    if (!std::isfinite(v)) throw NumericError("telemetry: non-finite value");
  }
  out_ << record.step;
  for (double v : record.values()) out_ << ',' << format_g17(v);
  out_ << "\n";
  if (!out_) throw IoError("telemetry: write failed");
  last_step_ = record.step;
  any_ = true;
}

void TelemetryWriter::flush() { out_.flush(); }

std::vector<RunRecord> read_telemetry(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open telemetry file: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError("telemetry file empty: " + path.string());
  std::vector<RunRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> fields;
    std::size_t start = 0;
    while (start <= line.size()) {
      const std::size_t comma = line.find(',', start);
      const std::string cell =
          line.substr(start, comma == std::string::npos ? std::string::npos
                                                        : comma - start);
      fields.push_back(std::stod(cell));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (fields.size() != RunRecord::column_names().size()) {
      throw SchemaError("telemetry row has wrong column count");
    }
    RunRecord r;
    r.step = static_cast<std::int64_t>(fields[0]);
    r.loss_task1 = fields[1];
    r.loss_task2 = fields[2];
    r.total_loss = fields[3];
    r.xi_a = fields[4];
    r.xi_b = fields[5];
    r.norm_g1p = fields[6];
    r.norm_g1pp = fields[7];
    r.norm_g2 = fields[8];
    r.lambda_a = fields[9];
    r.lambda_b = fields[10];
    r.mu_p = fields[11];
    r.mu_pp = fields[12];
    r.norm_gr1p = fields[13];
    r.norm_gr1pp = fields[14];
    records.push_back(r);
  }
  return records;
}

ConvergenceSummary convergence_summary(const std::vector<RunRecord>& records) {
  if (records.size() < 20) {
    throw NumericError("convergence_summary: needs at least 20 steps");
  }
  const std::size_t window = std::max<std::size_t>(1, records.size() / 10);
  auto window_means = [&](std::size_t begin, std::size_t end, double& abs_a,
                          double& abs_b, double& ratio) {
    double sum_a = 0.0, sum_b = 0.0, sum_r = 0.0;
    std::size_t ratio_count = 0;
    for (std::size_t i = begin; i < end; ++i) {
      sum_a += std::abs(records[i].xi_a);
      sum_b += std::abs(records[i].xi_b);
      if (records[i].norm_g1p > 0.0 && records[i].norm_g2 > 0.0) {
        const double r = records[i].norm_g2 / records[i].norm_g1p;
        sum_r += std::max(r, 1.0 / r);
        ++ratio_count;
      }
    }
    const double count = static_cast<double>(end - begin);
    abs_a = sum_a / count;
    abs_b = sum_b / count;
    ratio = ratio_count ? sum_r / static_cast<double>(ratio_count)
                        : std::numeric_limits<double>::quiet_NaN();
  };
  ConvergenceSummary s;
  window_means(0, window, s.first_abs_xi_a, s.first_abs_xi_b, s.first_norm_ratio);
  window_means(records.size() - window, records.size(), s.last_abs_xi_a, s.last_abs_xi_b,
               s.last_norm_ratio);
  return s;
}

ResultTable result_table(const std::vector<EvalReport>& reports) {
  if (reports.empty()) throw ConfigError("result_table: no reports");
  ResultTable table;
  std::ostringstream csv;
  csv << "mode,seed,dataset,auc_task1,auc_task2,loss_task1,loss_task2\n";
  std::vector<std::string> mode_order;
  std::map<std::string, std::vector<const EvalReport*>> by_mode;
  for (const EvalReport& r : reports) {
    if (!by_mode.contains(r.mode)) mode_order.push_back(r.mode);
    by_mode[r.mode].push_back(&r);
    csv << r.mode << ',' << r.seed << ',' << r.dataset << ','
        << format_g17(r.auc_task1) << ',' << format_g17(r.auc_task2) << ','
        << format_g17(r.loss_task1) << ',' << format_g17(r.loss_task2) << "\n";
  }
  std::ostringstream text;
  char line[256];
  std::snprintf(line, sizeof(line), "%-20s %6s %-16s %10s %10s %10s %10s\n", "mode",
                "seed", "dataset", "auc1", "auc2", "loss1", "loss2");
  text << line;
  for (const std::string& mode : mode_order) {
    double a1 = 0, a2 = 0, l1 = 0, l2 = 0;
    for (const EvalReport* r : by_mode[mode]) {
      std::snprintf(line, sizeof(line), "%-20s %6llu %-16s %10.4f %10.4f %10.4f %10.4f\n",
                    r->mode.c_str(), static_cast<unsigned long long>(r->seed),
                    r->dataset.c_str(), r->auc_task1, r->auc_task2, r->loss_task1,
                    r->loss_task2);
      text << line;
      a1 += r->auc_task1;
      a2 += r->auc_task2;
      l1 += r->loss_task1;
      l2 += r->loss_task2;
    }
    const double n = static_cast<double>(by_mode[mode].size());
    std::snprintf(line, sizeof(line), "%-20s %6s %-16s %10.4f %10.4f %10.4f %10.4f\n",
                  (mode + " (mean)").c_str(), "-", "-", a1 / n, a2 / n, l1 / n, l2 / n);
    text << line;
    csv << mode << ",mean,-," << format_g17(a1 / n) << ',' << format_g17(a2 / n) << ','
        << format_g17(l1 / n) << ',' << format_g17(l2 / n) << "\n";
  }
  table.text = text.str();
  table.csv = csv.str();
  return table;
}

}  // namespace drgrad
