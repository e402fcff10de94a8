#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace drgrad {

// Flattened per-tower gradients for one training step. The three towers
// share an architecture, so the vectors have equal length.
struct GradientTriple {
  std::vector<double> g1p;   // primary-task dedicated tower
  std::vector<double> g1pp;  // primary-task shared tower
  std::vector<double> g2;    // auxiliary-task tower
  std::int64_t step = 0;

  void validate() const;  // equal lengths, finite entries
};

// Routed gradients plus the similarity/scale diagnostics that produced them.
// xi_a / lambda_a pair with g1pp, xi_b / lambda_b pair with g2.
struct RouterOutput {
  std::vector<double> gr1p;
  std::vector<double> gr1pp;
  double xi_a = 0.0;
  double xi_b = 0.0;
  double lambda_a = 0.0;
  double lambda_b = 0.0;
};

// (u . v) / (|u| |v|); 0 if either norm is zero.
double cosine(std::span<const double> u, std::span<const double> v);

// clip(|u| / |v|, 0, 1)^gamma; 0 if |v| is zero.
double scale_ratio(std::span<const double> u, std::span<const double> v, double gamma);

double l2_norm(std::span<const double> v);

// Routed gradient additions:
//   gr1p  = (1 - 1{xi_a<0} * xi_a) * lambda_a * g1pp + 1{xi_b>=0} * lambda_b * g2
//   gr1pp = -1{xi_a*xi_b<0} * xi_a * xi_b * g1pp
RouterOutput route(const GradientTriple& triple, double gamma);

// Componentwise norm bounds on the routed gradients:
//   |gr1p|  <= (1 - min(xi_a, 0)) * lambda_a * |g1pp| + lambda_b * |g2|
//   |gr1pp| <= |g1pp|
struct NormBoundReport {
  double bound_p = 0.0;
  double actual_p = 0.0;
  double bound_pp = 0.0;
  double actual_pp = 0.0;
  bool ok = false;
  double slack_p() const { return bound_p - actual_p; }
  double slack_pp() const { return bound_pp - actual_pp; }
};

NormBoundReport norm_bound_check(const GradientTriple& triple, const RouterOutput& out);

// Four-case analysis of the effective upstream gradients. Evaluates the
// per-regime closed forms for the v1 and v_s paths with beta coefficients
// beta1 (g1pp) and beta2 (g2) and compares them to what route() produced:
//   v1 path: g1p + gr1p  vs  g1p + beta1 * amp_a * g1pp + 1{xi_b>=0} * beta2 * g2
//   vs path: g2 + g1pp + gr1pp  vs  g2 + amp_s * g1pp
// where amp_a = 1 - min(xi_a, 0) and amp_s = 1 - min(xi_a * xi_b, 0).
// Exact agreement on the v1 path requires beta1 = lambda_a, beta2 = lambda_b;
// the v_s path is beta-free.
struct Table1Report {
  int regime = 0;       // 0: a>=0,b>=0  1: a>=0,b<0  2: a<0,b>=0  3: a<0,b<0
  bool g2_present = false;  // g2 term participates in the v1 expression
  double max_abs_diff_v1 = 0.0;
  double max_abs_diff_vs = 0.0;
  bool v1_match = false;
  bool vs_match = false;
  bool ok() const { return v1_match && vs_match; }
};

Table1Report table1_oracle(const GradientTriple& triple, double gamma, double beta1,
                           double beta2, double tolerance = 1e-12);

}  // namespace drgrad
