#include "kpz/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "kpz/errors.hpp"
#include "kpz/parallel.hpp"
#include "kpz/specfun.hpp"

namespace kpz {

TwoTimeParams derive_params(double t1, double t2, double nu1, double nu2, double eta1, double eta2) {
  if (!(t1 > 0) || !(t2 > t1) || !std::isfinite(t2))
    throw domain_error("derive_params: need 0 < t1 < t2");
  if (!std::isfinite(nu1) || !std::isfinite(nu2) || !std::isfinite(eta1) || !std::isfinite(eta2))
    throw domain_error("derive_params: non-finite offset");
  TwoTimeParams p;
  p.t1 = t1;
  p.t2 = t2;
  p.nu1 = nu1;
  p.nu2 = nu2;
  p.eta1 = eta1;
  p.eta2 = eta2;
  p.dt = t2 - t1;
  const double r1 = std::cbrt(t1 / p.dt), r2 = std::cbrt(t2 / p.dt);
  p.alpha = r1;
  p.dnu = nu2 * r2 * r2 - nu1 * r1 * r1;
  p.lambda1 = eta1 - nu1 * nu1;
  p.lambda2 = eta2 - nu2 * nu2;
  p.dlambda = p.lambda2 * r2 - p.lambda1 * r1;
  p.deta = p.dlambda + p.dnu * p.dnu;
  return p;
}

TwoTimeParams with_eta1(const TwoTimeParams& p, double eta1) {
  return derive_params(p.t1, p.t2, p.nu1, p.nu2, eta1, p.eta2);
}

double deta_direct(double t1, double t2, double nu1, double nu2, double eta1, double eta2) {
  if (!(t1 > 0) || !(t2 > t1)) throw domain_error("deta_direct: need 0 < t1 < t2");
  const double d = t2 - t1;
  const double a = std::pow(t1 / d, 1.0 / 3.0), b = std::pow(t2 / d, 1.0 / 3.0);
  const double dn = nu2 * std::pow(t2 / d, 2.0 / 3.0) - nu1 * std::pow(t1 / d, 2.0 / 3.0);
  return (eta2 - nu2 * nu2) * b - (eta1 - nu1 * nu1) * a + dn * dn;
}

namespace {

AxisRule tau_rule(const KernelEvalConfig& cfg) {
  cfg.tau_quad.validate();
  const double L = cfg.tau_quad.semiinf_cutoff;
  const int panels = std::max(1, static_cast<int>(std::ceil(L)));
  return composite_rule(0.0, L, panels, cfg.tau_quad.nodes_per_axis);
}

void guard(double tail, double L, double tol, const char* who) {
  if (!(std::abs(tail) < tol)) {
    std::ostringstream os;
    os << who << ": integrand " << tail << " at tau cutoff " << L << " exceeds guard";
    throw truncation_error(os.str());
  }
}

// sign = +1: phi1 integrand, sign = -1: psi1 integrand
double tau_integral(const TwoTimeParams& p, double x, double y, int sign, const KernelEvalConfig& cfg) {
  const double c = p.nu1 - p.alpha * p.dnu;
  auto f = [&](double t) {
    const double s = sign * t;
    return std::exp(c * s) * airy_kernel(p.eta1 - s, p.eta1 - y) *
           airy_kernel(p.deta + p.alpha * s, p.deta + p.alpha * x);
  };
  const double L = cfg.tau_quad.semiinf_cutoff;
  const double tail = f(L);
  guard(tail, L, cfg.tau_guard, sign > 0 ? "phi1" : "psi1");
  const AxisRule r = tau_rule(cfg);
  double sum = 0;
  for (std::size_t k = 0; k < r.x.size(); ++k) sum += r.w[k] * f(r.x[k]);
  return sum;
}

}  // namespace

double phi1(const TwoTimeParams& p, double x, double y, const KernelEvalConfig& cfg) {
  return -p.alpha * std::exp(p.alpha * p.dnu * x - p.nu1 * y) * tau_integral(p, x, y, +1, cfg);
}

double psi1(const TwoTimeParams& p, double x, double y, const KernelEvalConfig& cfg) {
  return p.alpha * std::exp(p.alpha * p.dnu * x - p.nu1 * y) * tau_integral(p, x, y, -1, cfg);
}

double phi2(const TwoTimeParams& p, double x, double y) {
  return p.alpha * std::exp(p.alpha * p.dnu * (x - y)) *
         airy_kernel(p.deta + p.alpha * x, p.deta + p.alpha * y);
}

double phi3(const TwoTimeParams& p, double x, double y) {
  return std::exp(p.nu1 * (x - y)) * airy_kernel(p.eta1 - x, p.eta1 - y);
}

double phi(const TwoTimeParams& p, double x, double y, const KernelEvalConfig& cfg) {
  double v = phi1(p, x, y, cfg);
  if (y >= 0) v += phi2(p, x, y);
  if (x < 0) v -= phi3(p, x, y);
  return v;
}

double psi(const TwoTimeParams& p, double x, double y, const KernelEvalConfig& cfg) {
  double v = -psi1(p, x, y, cfg);
  if (y > 0) v -= phi2(p, x, y);
  if (x <= 0) v += phi3(p, x, y);
  return v;
}

// ---- contour forms ----

ContourSpec admissible_contour(const TwoTimeParams& p, ContourKernel which, const ContourSpec& base) {
  ContourSpec c = base;
  c.d1 = std::max({base.d1, p.nu1 + 1.0});
  c.d2 = std::max({base.d2, 1.0 - p.nu1});
  c.d4 = std::max({base.d4, 1.0 - p.dnu});
  switch (which) {
    case ContourKernel::phi1:
      c.d3 = std::max({base.d3, p.dnu + 1.0, (c.d1 + 1.0) / p.alpha});
      break;
    case ContourKernel::psi1:
      c.d3 = std::max(p.dnu + 1.0, 1.0);
      c.d1 = std::max(c.d1, p.alpha * c.d3 + 1.0);
      break;
    case ContourKernel::phi2:
      c.d3 = std::max({base.d3, p.dnu + 1.0});
      break;
    case ContourKernel::phi3:
      break;
  }
  return c;
}

void check_contour(const TwoTimeParams& p, ContourKernel which, const ContourSpec& c) {
  auto fail = [](const std::string& m) { throw argument_error("contour offsets: " + m); };
  const bool uses_z = which != ContourKernel::phi2;
  const bool uses_w = which != ContourKernel::phi3;
  if (uses_z) {
    if (!(c.d1 > 0) || !(c.d2 > 0)) fail("d1, d2 must be positive");
    if (!(c.d1 > p.nu1) || !(c.d2 > -p.nu1)) fail("z/zeta lines do not decay (need d1 > nu1, d2 > -nu1)");
  }
  if (uses_w) {
    if (!(c.d3 > 0) || !(c.d4 > 0)) fail("d3, d4 must be positive");
    if (!(c.d3 > p.dnu) || !(c.d4 > -p.dnu)) fail("w/omega lines do not decay (need d3 > dnu, d4 > -dnu)");
  }
  if (which == ContourKernel::phi1 && !(p.alpha * c.d3 - c.d1 >= 1.0 - 1e-12)) fail("phi1 needs alpha*d3 - d1 >= 1");
  if (which == ContourKernel::psi1 && !(c.d1 - p.alpha * c.d3 >= 1.0 - 1e-12)) fail("psi1 needs d1 - alpha*d3 >= 1");
}

namespace {

// Nodes on Re = offset with Gaussian decay rate `rate` in the imaginary part.
ContourNodes decaying_line(double offset, double rate, double step) {
  const double T = std::sqrt(80.0 / rate) + 1.0;
  return line_nodes(offset, T, step);
}

// exp(sgn*(u^3/3 - a u^2 - b u))
cplx cubic_exp(cplx u, double a, double b, double sgn) {
  return std::exp(sgn * (u * u * u / 3.0 - a * u * u - b * u));
}

// sum_j c_j E_j / (u - v_j) for each u
std::vector<cplx> cauchy_sums(const ContourNodes& outer, const ContourNodes& inner, const std::vector<cplx>& e_inner) {
  std::vector<cplx> out(outer.z.size());
  for (std::size_t i = 0; i < outer.z.size(); ++i) {
    cplx s = 0;
    for (std::size_t j = 0; j < inner.z.size(); ++j) s += inner.c[j] * e_inner[j] / (outer.z[i] - inner.z[j]);
    out[i] = s;
  }
  return out;
}

}  // namespace

ContourValue kernel_contour_raw(ContourKernel which, const TwoTimeParams& p, double x, double y,
                                const KernelEvalConfig& cfg) {
  if (!(cfg.contour_step > 0)) throw argument_error("contour_step must be positive");
  const ContourSpec c = cfg.auto_offsets ? admissible_contour(p, which, cfg.contour) : cfg.contour;
  check_contour(p, which, c);
  const double h = cfg.contour_step;
  cplx total = 0;

  if (which == ContourKernel::phi3) {
    const auto Z = decaying_line(c.d1, c.d1 - p.nu1, h);
    const auto S = decaying_line(-c.d2, c.d2 + p.nu1, h);
    std::vector<cplx> ez(Z.z.size()), es(S.z.size());
    for (std::size_t i = 0; i < Z.z.size(); ++i) ez[i] = cubic_exp(Z.z[i], p.nu1, p.lambda1 - x, +1);
    for (std::size_t j = 0; j < S.z.size(); ++j) es[j] = cubic_exp(S.z[j], p.nu1, p.lambda1 - y, -1);
    const auto F = cauchy_sums(Z, S, es);
    for (std::size_t i = 0; i < Z.z.size(); ++i) total += Z.c[i] * ez[i] * F[i];
    return {total.real(), total.imag()};
  }
  if (which == ContourKernel::phi2) {
    const auto W = decaying_line(c.d3, c.d3 - p.dnu, h);
    const auto O = decaying_line(-c.d4, c.d4 + p.dnu, h);
    std::vector<cplx> ew(W.z.size()), eo(O.z.size());
    for (std::size_t i = 0; i < W.z.size(); ++i) ew[i] = cubic_exp(W.z[i], p.dnu, p.dlambda + p.alpha * y, +1);
    for (std::size_t j = 0; j < O.z.size(); ++j) eo[j] = cubic_exp(O.z[j], p.dnu, p.dlambda + p.alpha * x, -1);
    const auto G = cauchy_sums(W, O, eo);
    for (std::size_t i = 0; i < W.z.size(); ++i) total += W.c[i] * ew[i] * G[i];
    total *= p.alpha;
    return {total.real(), total.imag()};
  }

  // phi1 / psi1: same integrand, different ordering of the z and alpha*w lines
  const auto Z = decaying_line(c.d1, c.d1 - p.nu1, h);
  const auto S = decaying_line(-c.d2, c.d2 + p.nu1, h);
  const auto W = decaying_line(c.d3, c.d3 - p.dnu, h);
  const auto O = decaying_line(-c.d4, c.d4 + p.dnu, h);
  std::vector<cplx> ez(Z.z.size()), es(S.z.size()), ew(W.z.size()), eo(O.z.size());
  for (std::size_t i = 0; i < Z.z.size(); ++i) ez[i] = Z.c[i] * cubic_exp(Z.z[i], p.nu1, p.lambda1, +1);
  for (std::size_t j = 0; j < S.z.size(); ++j) es[j] = cubic_exp(S.z[j], p.nu1, p.lambda1 - y, -1);
  for (std::size_t i = 0; i < W.z.size(); ++i) ew[i] = W.c[i] * cubic_exp(W.z[i], p.dnu, p.dlambda, +1);
  for (std::size_t j = 0; j < O.z.size(); ++j) eo[j] = cubic_exp(O.z[j], p.dnu, p.dlambda + p.alpha * x, -1);
  const auto F = cauchy_sums(Z, S, es);
  const auto G = cauchy_sums(W, O, eo);
  for (std::size_t i = 0; i < Z.z.size(); ++i) {
    const cplx a = ez[i] * F[i];
    cplx s = 0;
    for (std::size_t k = 0; k < W.z.size(); ++k) s += ew[k] * G[k] / (Z.z[i] - p.alpha * W.z[k]);
    total += a * s;
  }
  total *= p.alpha;
  return {total.real(), total.imag()};
}

namespace {
double real_or_throw(const ContourValue& v, const char* who) {
  if (!(std::abs(v.im) < 1e-9) || !std::isfinite(v.re)) {
    std::ostringstream os;
    os << who << ": imaginary residue " << v.im << " (real part " << v.re << ")";
    throw consistency_error(os.str());
  }
  return v.re;
}
}  // namespace

double phi1_contour(const TwoTimeParams& p, double x, double y, const KernelEvalConfig& cfg) {
  return real_or_throw(kernel_contour_raw(ContourKernel::phi1, p, x, y, cfg), "phi1_contour");
}
double psi1_contour(const TwoTimeParams& p, double x, double y, const KernelEvalConfig& cfg) {
  return real_or_throw(kernel_contour_raw(ContourKernel::psi1, p, x, y, cfg), "psi1_contour");
}
double phi2_contour(const TwoTimeParams& p, double x, double y, const KernelEvalConfig& cfg) {
  return real_or_throw(kernel_contour_raw(ContourKernel::phi2, p, x, y, cfg), "phi2_contour");
}
double phi3_contour(const TwoTimeParams& p, double x, double y, const KernelEvalConfig& cfg) {
  return real_or_throw(kernel_contour_raw(ContourKernel::phi3, p, x, y, cfg), "phi3_contour");
}

// ---- Airy-Gaussian identities ----

AiryContourPair airy_gaussian_contour_both(double A, double B, AiryContourSide side, double D) {
  if (!(D > 0) || !std::isfinite(D)) throw domain_error("airy_gaussian_contour: need D > 0");
  if (!std::isfinite(A) || !std::isfinite(B)) throw domain_error("airy_gaussian_contour: non-finite A or B");
  const bool raising = side == AiryContourSide::raising;
  const double sgn = raising ? 1.0 : -1.0;
  const cplx vertex = raising ? cplx(D, 0) : cplx(-D, 0);
  const double ang = raising ? std::numbers::pi / 3 : 2 * std::numbers::pi / 3;
  const cplx up = std::polar(1.0, ang), down = std::polar(1.0, -ang);
  auto g = [&](cplx z) { return std::exp(sgn * z * z * z / 3.0 + A * z * z + B * z); };
  const double S = 8.0 + 3.0 * std::abs(A) + std::sqrt(std::abs(B)) + D;
  const AxisRule r = composite_rule(0.0, S, 96, 24);
  cplx sum = 0;
  for (std::size_t k = 0; k < r.x.size(); ++k)
    sum += r.w[k] * (g(vertex + r.x[k] * up) * up - g(vertex + r.x[k] * down) * down);
  sum /= cplx(0, 2 * std::numbers::pi);
  AiryContourPair out;
  out.numeric = sum.real();
  out.numeric_imag = sum.imag();
  out.closed = raising ? airy_ai(A * A - B) * std::exp(-A * B + 2.0 * A * A * A / 3.0)
                       : airy_ai(B + A * A) * std::exp(A * B + 2.0 * A * A * A / 3.0);
  return out;
}

double airy_gaussian_contour(double A, double B, AiryContourSide side, double D) {
  return airy_gaussian_contour_both(A, B, side, D).closed;
}

// ---- kernel matrices ----

KernelMatrices kernel_matrices(const TwoTimeParams& p, const std::vector<double>& pts, const KernelEvalConfig& cfg) {
  const std::size_t n = pts.size();
  KernelMatrices m;
  m.pts = pts;
  m.phi.assign(n * n, 0.0);
  m.psi.assign(n * n, 0.0);
  if (n == 0) return m;
  const AxisRule r = tau_rule(cfg);
  const std::size_t nt = r.x.size();
  const double c = p.nu1 - p.alpha * p.dnu;

  // phi1: sum_k w_k e^{c tau} K(eta1 - tau, eta1 - y_j) K(deta + a tau, deta + a x_i)
  Eigen::MatrixXd A1(nt, n), B1(nt, n), A2(nt, n), B2(nt, n);
  parallel_for(nt, [&](std::size_t k) {
    const double t = r.x[k];
    const double e1 = r.w[k] * std::exp(c * t), e2 = r.w[k] * std::exp(-c * t);
    for (std::size_t j = 0; j < n; ++j) {
      A1(k, j) = airy_kernel(p.eta1 - t, p.eta1 - pts[j]);
      B1(k, j) = e1 * airy_kernel(p.deta + p.alpha * t, p.deta + p.alpha * pts[j]);
      A2(k, j) = airy_kernel(p.eta1 + t, p.eta1 - pts[j]);
      B2(k, j) = e2 * airy_kernel(p.deta - p.alpha * t, p.deta + p.alpha * pts[j]);
    }
  });
  const double L = cfg.tau_quad.semiinf_cutoff;
  for (std::size_t j = 0; j < n; ++j) {
    const double tail1 = std::exp(c * L) * airy_kernel(p.deta + p.alpha * L, p.deta + p.alpha * pts[j]);
    const double tail2 = std::exp(-c * L) * airy_kernel(p.eta1 + L, p.eta1 - pts[j]);
    guard(tail1, L, cfg.tau_guard, "phi1");
    guard(tail2, L, cfg.tau_guard, "psi1");
  }
  const Eigen::MatrixXd I1 = B1.transpose() * A1;  // (i, j)
  const Eigen::MatrixXd I2 = B2.transpose() * A2;

  for (std::size_t i = 0; i < n; ++i) {
    const double x = pts[i];
    for (std::size_t j = 0; j < n; ++j) {
      const double y = pts[j];
      const double pre = p.alpha * std::exp(p.alpha * p.dnu * x - p.nu1 * y);
      const double f2 = phi2(p, x, y), f3 = phi3(p, x, y);
      double vphi = -pre * I1(i, j), vpsi = -pre * I2(i, j);
      if (y >= 0) vphi += f2;
      if (x < 0) vphi -= f3;
      if (y > 0) vpsi -= f2;
      if (x <= 0) vpsi += f3;
      m.phi[i * n + j] = vphi;
      m.psi[i * n + j] = vpsi;
    }
  }
  return m;
}

}  // namespace kpz
