#include "drgrad/router.hpp"

#include <algorithm>
#include <cmath>

#include "drgrad/error.hpp"

namespace drgrad {

void GradientTriple::validate() const {
  if (g1p.size() != g1pp.size() || g1p.size() != g2.size()) {
    throw ShapeError("GradientTriple: tower gradient lengths differ");
  }
  auto finite = [](const std::vector<double>& v) {
    for (double x : v) {
      if (!std::isfinite(x)) return false;
    }
    return true;
  };
  if (!finite(g1p) || !finite(g1pp) || !finite(g2)) {
    throw NumericError("GradientTriple: non-finite gradient entries");
  }
}

double l2_norm(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  return std::sqrt(sum);
}

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw ShapeError("cosine: length mismatch");
  double dot = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) dot += u[i] * v[i];
  const double nu = l2_norm(u);
  const double nv = l2_norm(v);
  if (nu == 0.0 || nv == 0.0) return 0.0;
  // Clamp roundoff so downstream indicator logic sees a true cosine.
  return std::clamp(dot / (nu * nv), -1.0, 1.0);
}

double scale_ratio(std::span<const double> u, std::span<const double> v, double gamma) {
  if (gamma <= 0.0) throw NumericError("scale_ratio: gamma must be positive");
  const double nv = l2_norm(v);
  if (nv == 0.0) return 0.0;
  const double ratio = std::clamp(l2_norm(u) / nv, 0.0, 1.0);
  return std::pow(ratio, gamma);
}

RouterOutput route(const GradientTriple& triple, double gamma) {
  triple.validate();
  RouterOutput out;
  out.xi_a = cosine(triple.g1p, triple.g1pp);
  out.xi_b = cosine(triple.g1p, triple.g2);
  out.lambda_a = scale_ratio(triple.g1p, triple.g1pp, gamma);
  out.lambda_b = scale_ratio(triple.g1p, triple.g2, gamma);

  const double coef_a = (1.0 - (out.xi_a < 0.0 ? out.xi_a : 0.0)) * out.lambda_a;
  const double coef_b = (out.xi_b >= 0.0 ? out.lambda_b : 0.0);
  const double prod = out.xi_a * out.xi_b;
  const double coef_pp = (prod < 0.0 ? -prod : 0.0);

  const std::size_t n = triple.g1p.size();
  out.gr1p.resize(n);
  out.gr1pp.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.gr1p[i] = coef_a * triple.g1pp[i] + coef_b * triple.g2[i];
    out.gr1pp[i] = coef_pp * triple.g1pp[i];
  }
  return out;
}

NormBoundReport norm_bound_check(const GradientTriple& triple, const RouterOutput& out) {
  NormBoundReport report;
  const double norm_g1pp = l2_norm(triple.g1pp);
  const double norm_g2 = l2_norm(triple.g2);
  report.actual_p = l2_norm(out.gr1p);
  report.actual_pp = l2_norm(out.gr1pp);
  report.bound_p = (1.0 - std::min(out.xi_a, 0.0)) * out.lambda_a * norm_g1pp +
                   out.lambda_b * norm_g2;
  report.bound_pp = norm_g1pp;
  // Tolerate roundoff in the tight cases.
  const double eps_p = 1e-9 * (1.0 + report.bound_p);
  const double eps_pp = 1e-9 * (1.0 + report.bound_pp);
  report.ok = report.actual_p <= report.bound_p + eps_p &&
              report.actual_pp <= report.bound_pp + eps_pp;
  return report;
}

Table1Report table1_oracle(const GradientTriple& triple, double gamma, double beta1,
                           double beta2, double tolerance) {
  const RouterOutput out = route(triple, gamma);
  Table1Report report;
  const bool a_neg = out.xi_a < 0.0;
  const bool b_neg = out.xi_b < 0.0;
  report.regime = (a_neg ? 2 : 0) + (b_neg ? 1 : 0);
  report.g2_present = !b_neg;

  const double amp_a = a_neg ? (1.0 - out.xi_a) : 1.0;
  const double prod = out.xi_a * out.xi_b;
  const double amp_s = prod < 0.0 ? (1.0 - prod) : 1.0;

  const std::size_t n = triple.g1p.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double routed_v1 = triple.g1p[i] + out.gr1p[i];
    const double table_v1 = triple.g1p[i] + beta1 * amp_a * triple.g1pp[i] +
                            (report.g2_present ? beta2 * triple.g2[i] : 0.0);
    report.max_abs_diff_v1 =
        std::max(report.max_abs_diff_v1, std::abs(routed_v1 - table_v1));

    const double routed_vs = triple.g2[i] + triple.g1pp[i] + out.gr1pp[i];
    const double table_vs = triple.g2[i] + amp_s * triple.g1pp[i];
    report.max_abs_diff_vs =
        std::max(report.max_abs_diff_vs, std::abs(routed_vs - table_vs));
  }
  report.v1_match = report.max_abs_diff_v1 <= tolerance;
  report.vs_match = report.max_abs_diff_vs <= tolerance;
  return report;
}

}  // namespace drgrad
