#include "kpz/quad.hpp"

#include <boost/random/sobol.hpp>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <random>
#include <string>

#include "kpz/errors.hpp"
#include "kpz/parallel.hpp"

namespace kpz {

GaussRule gauss_legendre(int n) {
  if (n < 1) throw argument_error("gauss_legendre: n must be >= 1");
  GaussRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) {
        p1 = x;
        p0 = 1.0;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged node
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      double p2 = ((2.0 * k - 1) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = (n == 1) ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    r.weights[i] = w;
    r.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) r.nodes[n / 2] = 0.0;
  return r;
}

const GaussRule& gauss_legendre_cached(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<GaussRule>> cache;
  std::lock_guard<std::mutex> lk(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<GaussRule>(gauss_legendre(n));
  return *slot;
}

void QuadratureSpec::validate() const {
  if (nodes_per_axis < 2) throw argument_error("QuadratureSpec: nodes_per_axis must be >= 2");
  if (!(semiinf_cutoff > 0)) throw argument_error("QuadratureSpec: semiinf_cutoff must be > 0");
}

void ContourSpec::validate() const {
  if (!(d1 > 0 && d2 > 0 && d3 > 0 && d4 > 0)) throw argument_error("ContourSpec: offsets must be positive");
  if (!(tau1 > 0 && tau2 > 0)) throw argument_error("ContourSpec: radii must be positive");
  if (!(line_halflength > 0) || line_nodes < 3 || circle_nodes < 3)
    throw argument_error("ContourSpec: bad truncation or node counts");
}

AxisRule interval_rule(double a, double b, int n) {
  const auto& g = gauss_legendre_cached(n);
  AxisRule r;
  r.x.resize(n);
  r.w.resize(n);
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  for (int i = 0; i < n; ++i) {
    r.x[i] = c + h * g.nodes[i];
    r.w[i] = h * g.weights[i];
  }
  return r;
}

AxisRule composite_rule(double a, double b, int panels, int nodes) {
  AxisRule r;
  r.x.reserve(std::size_t(panels) * nodes);
  r.w.reserve(std::size_t(panels) * nodes);
  for (int p = 0; p < panels; ++p) {
    auto q = interval_rule(a + (b - a) * p / panels, a + (b - a) * (p + 1) / panels, nodes);
    r.x.insert(r.x.end(), q.x.begin(), q.x.end());
    r.w.insert(r.w.end(), q.w.begin(), q.w.end());
  }
  return r;
}

AxisRule halfline_rule(Side side, int n, const QuadratureSpec& spec) {
  AxisRule r;
  const double L = spec.semiinf_cutoff;
  switch (spec.mapping) {
    case Mapping::linear_truncate:
      r = interval_rule(0.0, L, n);
      break;
    case Mapping::rational_map: {
      // x = c u / (1-u)
      const double c = L / 10.0;
      auto u = interval_rule(0.0, 1.0, n);
      r.x.resize(n);
      r.w.resize(n);
      for (int i = 0; i < n; ++i) {
        const double om = 1.0 - u.x[i];
        r.x[i] = c * u.x[i] / om;
        r.w[i] = u.w[i] * c / (om * om);
      }
      break;
    }
    case Mapping::exp_map: {
      // x = -c log(1-u)
      const double c = L / 20.0;
      auto u = interval_rule(0.0, 1.0, n);
      r.x.resize(n);
      r.w.resize(n);
      for (int i = 0; i < n; ++i) {
        const double om = 1.0 - u.x[i];
        r.x[i] = -c * std::log(om);
        r.w[i] = u.w[i] * c / om;
      }
      break;
    }
  }
  if (side == Side::left)
    for (auto& x : r.x) x = -x;
  return r;
}

AxisRule axis_rule(const AxisDomain& d, int n, const QuadratureSpec& spec) {
  switch (d.kind) {
    case AxisDomain::Kind::left_halfline:
      return halfline_rule(Side::left, n, spec);
    case AxisDomain::Kind::right_halfline:
      return halfline_rule(Side::right, n, spec);
    case AxisDomain::Kind::interval:
      break;
  }
  return interval_rule(d.a, d.b, n);
}

namespace {

double apply_rule(const ScalarFn& f, const AxisRule& r) {
  double s = 0;
  for (std::size_t i = 0; i < r.x.size(); ++i) {
    const double v = f(r.x[i]);
    if (!std::isfinite(v))
      throw numeric_error("non-finite integrand at node x=" + std::to_string(r.x[i]));
    s += r.w[i] * v;
  }
  return s;
}

double tensor_sum(const VectorFn& f, const std::vector<AxisRule>& rules) {
  const std::size_t d = rules.size();
  const std::size_t n0 = rules[0].x.size();
  std::size_t inner = 1;
  for (std::size_t k = 1; k < d; ++k) inner *= rules[k].x.size();
  std::vector<double> partial(n0, 0.0);
  parallel_for(n0, [&](std::size_t i0) {
    std::vector<double> pt(d);
    pt[0] = rules[0].x[i0];
    double s = 0;
    for (std::size_t flat = 0; flat < inner; ++flat) {
      std::size_t rem = flat;
      double w = rules[0].w[i0];
      for (std::size_t k = d; k-- > 1;) {
        const std::size_t nk = rules[k].x.size();
        const std::size_t ik = rem % nk;
        rem /= nk;
        pt[k] = rules[k].x[ik];
        w *= rules[k].w[ik];
      }
      const double v = f(std::span<const double>(pt));
      if (!std::isfinite(v)) throw numeric_error("non-finite integrand in tensor_integrate");
      s += w * v;
    }
    partial[i0] = s;
  });
  double total = 0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace

QuadResult integrate_halfline(const ScalarFn& f, Side side, const QuadratureSpec& spec) {
  spec.validate();
  const int n = spec.nodes_per_axis;
  const double coarse = apply_rule(f, halfline_rule(side, n, spec));
  const double fine = apply_rule(f, halfline_rule(side, 2 * n, spec));
  return {fine, std::abs(fine - coarse)};
}

QuadResult tensor_integrate(const VectorFn& f, const std::vector<AxisDomain>& domains,
                            const QuadratureSpec& spec) {
  spec.validate();
  if (domains.empty()) throw argument_error("tensor_integrate: no axes");
  if (domains.size() > 4) throw argument_error("tensor_integrate: dimension > 4, use qmc_integrate");
  const int n = spec.nodes_per_axis;
  const int nc = std::max(2, n / 2);
  std::vector<AxisRule> fine, coarse;
  for (const auto& d : domains) {
    fine.push_back(axis_rule(d, n, spec));
    coarse.push_back(axis_rule(d, nc, spec));
  }
  const double vf = tensor_sum(f, fine);
  const double vc = tensor_sum(f, coarse);
  return {vf, std::abs(vf - vc)};
}

QuadResult qmc_integrate(const VectorFn& f, const std::vector<AxisDomain>& domains, std::int64_t n_points,
                         std::uint64_t seed, const QmcOptions& opt) {
  const std::size_t d = domains.size();
  if (d == 0) throw argument_error("qmc_integrate: no axes");
  if (n_points < 1 || opt.shifts < 2) throw argument_error("qmc_integrate: need n_points >= 1 and >= 2 shifts");
  std::mt19937_64 gen(seed);
  std::vector<std::vector<std::uint64_t>> shift(opt.shifts, std::vector<std::uint64_t>(d));
  for (auto& s : shift)
    for (auto& v : s) v = gen();
  std::vector<double> est(opt.shifts, 0.0);
  parallel_for(static_cast<std::size_t>(opt.shifts), [&](std::size_t r) {
    boost::random::sobol sob(d);
    std::vector<std::uint64_t> raw(d);
    std::vector<double> pt(d);
    double sum = 0;
    for (std::int64_t i = 0; i < n_points; ++i) {
      sob.generate(raw.begin(), raw.end());
      double jac = 1;
      for (std::size_t k = 0; k < d; ++k) {
        const double u = (static_cast<double>((raw[k] ^ shift[r][k]) >> 11) + 0.5) * 0x1.0p-53;
        const auto& dom = domains[k];
        double x;
        if (dom.kind == AxisDomain::Kind::interval) {
          x = dom.a + (dom.b - dom.a) * u;
          jac *= dom.b - dom.a;
        } else {
          const double om = 1.0 - u;
          switch (opt.mapping) {
            case Mapping::linear_truncate:
              x = opt.scale * u;
              jac *= opt.scale;
              break;
            case Mapping::rational_map:
              x = opt.scale * u / om;
              jac *= opt.scale / (om * om);
              break;
            default:
              x = -opt.scale * std::log(om);
              jac *= opt.scale / om;
              break;
          }
          if (dom.kind == AxisDomain::Kind::left_halfline) x = -x;
        }
        pt[k] = x;
      }
      const double v = f(std::span<const double>(pt));
      if (!std::isfinite(v)) throw numeric_error("non-finite integrand in qmc_integrate");
      sum += v * jac;
    }
    est[r] = sum / static_cast<double>(n_points);
  });
  double mean = 0;
  for (double e : est) mean += e;
  mean /= opt.shifts;
  double var = 0;
  for (double e : est) var += (e - mean) * (e - mean);
  var /= (opt.shifts - 1);
  return {mean, std::sqrt(var / opt.shifts)};
}

ContourNodes line_nodes(double offset, double halflength, double step) {
  const int m = static_cast<int>(std::ceil(halflength / step));
  ContourNodes cn;
  cn.z.reserve(2 * m + 1);
  cn.c.reserve(2 * m + 1);
  // dz = i dt, and 1/(2 pi i) i dt = dt / 2 pi
  const double wt = step / (2.0 * std::numbers::pi);
  for (int k = -m; k <= m; ++k) {
    cn.z.emplace_back(offset, k * step);
    cn.c.emplace_back(wt, 0.0);
  }
  return cn;
}

ContourNodes circle_nodes(double radius, int n) {
  ContourNodes cn;
  cn.z.reserve(n);
  cn.c.reserve(n);
  for (int k = 0; k < n; ++k) {
    const double th = 2.0 * std::numbers::pi * k / n;
    const cplx z = std::polar(radius, th);
    cn.z.push_back(z);
    cn.c.push_back(z / double(n));
  }
  return cn;
}

cplx line_contour_quad(const std::function<cplx(cplx)>& g, double offset, const ContourSpec& spec) {
  const int n = spec.line_nodes;
  const double L = spec.line_halflength;
  const double h = 2.0 * L / (n - 1);
  cplx sum = 0;
  double gmax = 0;
  for (int k = 0; k < n; ++k) {
    const double t = -L + k * h;
    const cplx v = g(cplx(offset, t));
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw numeric_error("line_contour_quad: non-finite integrand at t=" + std::to_string(t));
    gmax = std::max(gmax, std::abs(v));
    sum += v;
  }
  const double ends = std::max(std::abs(g(cplx(offset, -L))), std::abs(g(cplx(offset, L))));
  if (ends > spec.endpoint_tol * std::max(1.0, gmax))
    throw truncation_error("line_contour_quad: integrand not negligible at |t|=" + std::to_string(L));
  return sum * h / (2.0 * std::numbers::pi);
}

cplx circle_contour_quad(const std::function<cplx(cplx)>& g, double radius, int n) {
  if (!(radius > 0) || n < 1) throw argument_error("circle_contour_quad: need radius > 0 and n >= 1");
  cplx sum = 0;
  for (int k = 0; k < n; ++k) {
    const cplx z = std::polar(radius, 2.0 * std::numbers::pi * k / n);
    sum += g(z) * z;
  }
  return sum / double(n);
}

}  // namespace kpz
