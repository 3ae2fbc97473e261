#include "kpz/tw.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <vector>

#include "kpz/errors.hpp"
#include "kpz/quad.hpp"
#include "kpz/specfun.hpp"

namespace kpz {

void FredholmSpec::validate() const {
  if (nystrom_nodes < 4) throw argument_error("FredholmSpec: nystrom_nodes must be >= 4");
  if (!(domain_cutoff > 0)) throw argument_error("FredholmSpec: domain_cutoff must be > 0");
}

double f2_cdf(double eta, const FredholmSpec& spec) {
  if (!std::isfinite(eta)) throw domain_error("f2_cdf: non-finite eta");
  spec.validate();
  const int n = spec.nystrom_nodes;
  const auto r = interval_rule(eta, eta + spec.domain_cutoff, n);
  std::vector<double> sw(n), a(n), ap(n);
  for (int i = 0; i < n; ++i) {
    sw[i] = std::sqrt(r.w[i]);
    airy_ai_pair(r.x[i], a[i], ap[i]);
  }
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double k = (i == j) ? airy_kernel(r.x[i], r.x[i])
                               : (std::abs(r.x[i] - r.x[j]) < 1e-4
                                      ? airy_kernel(r.x[i], r.x[j])
                                      : (a[i] * ap[j] - ap[i] * a[j]) / (r.x[i] - r.x[j]));
      const double v = -sw[i] * k * sw[j];
      m(i, j) = v;
      m(j, i) = v;
    }
    m(i, i) += 1.0;
  }
  return Eigen::PartialPivLU<Eigen::MatrixXd>(m).determinant();
}

namespace {

double hankel_det(int n, const std::vector<double>& mom) {
  Eigen::MatrixXd h(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) h(i, j) = mom[i + j];
  return Eigen::FullPivLU<Eigen::MatrixXd>(h).determinant();
}

void check_gue_args(int n, double mu, double xi) {
  if (n < 1) throw argument_error("gue_finite_cdf: n must be >= 1");
  if (!(mu > 0)) throw domain_error("gue_finite_cdf: mu must be > 0");
  if (std::isnan(xi)) throw domain_error("gue_finite_cdf: xi is NaN");
}

}  // namespace

double gue_finite_cdf(int n, double mu, double xi) {
  check_gue_args(n, mu, xi);
  if (n > 8) return gue_finite_cdf_gram(n, mu, xi);
  if (xi == INFINITY) return 1.0;
  if (xi == -INFINITY) return 0.0;
  // the law only depends on xi / sqrt(mu); work with unit variance
  const double s = xi / std::sqrt(mu);
  const int k_max = 2 * n - 1;
  const double root2pi = std::sqrt(2.0 * std::numbers::pi);
  const double g = std::exp(-0.5 * s * s);
  std::vector<double> m(k_max + 1), full(k_max + 1);
  m[0] = root2pi * 0.5 * std::erfc(-s / std::numbers::sqrt2);
  full[0] = root2pi;
  if (k_max >= 1) {
    m[1] = -g;
    full[1] = 0.0;
  }
  double sp = 1.0;  // s^(k-1)
  for (int k = 2; k <= k_max; ++k) {
    sp *= s;
    m[k] = (k - 1) * m[k - 2] - sp * g;
    full[k] = (k - 1) * full[k - 2];
  }
  return hankel_det(n, m) / hankel_det(n, full);
}

double gue_finite_cdf_gram(int n, double mu, double xi) {
  check_gue_args(n, mu, xi);
  if (xi == INFINITY) return 1.0;
  if (xi == -INFINITY) return 0.0;
  const double s = xi / std::sqrt(mu);
  const double edge = std::sqrt(4.0 * n + 2.0) + 12.0;
  const double lo = std::min(-edge, s - 12.0);
  if (s <= lo) return 0.0;
  const int panels = 8;
  const auto r = composite_rule(lo, s, panels, n + 24);
  const std::size_t q = r.x.size();
  // orthonormal Hermite functions for weight exp(-x^2/2), three-term recurrence
  Eigen::MatrixXd psi(n, q);
  const double c0 = std::pow(2.0 * std::numbers::pi, -0.25);
  for (std::size_t j = 0; j < q; ++j) {
    const double x = r.x[j];
    double pm = 0.0, p = c0 * std::exp(-0.25 * x * x);
    for (int i = 0; i < n; ++i) {
      psi(i, j) = p * std::sqrt(r.w[j]);
      const double pn = (x * p - std::sqrt(double(i)) * pm) / std::sqrt(double(i + 1));
      pm = p;
      p = pn;
    }
  }
  Eigen::MatrixXd gram = psi * psi.transpose();
  return Eigen::PartialPivLU<Eigen::MatrixXd>(gram).determinant();
}

}  // namespace kpz
