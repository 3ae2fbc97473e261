#include "kpz/prelimit.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>

#include "kpz/errors.hpp"
#include "kpz/twotime.hpp"

namespace kpz {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

double log_binom(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double factorial(int n) {
  double f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Permutations of {0..n-1} with their signs.
struct Perm {
  std::vector<int> p;
  int sign;
};

std::vector<Perm> permutations(int n) {
  std::vector<int> p(n);
  for (int i = 0; i < n; ++i) p[i] = i;
  std::vector<Perm> out;
  do {
    int inv = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (p[i] > p[j]) ++inv;
    out.push_back({p, inv % 2 ? -1 : 1});
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

// Increasing tuples of length r from [a,b].
void for_each_tuple(int r, int a, int b, const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> cur;
  std::function<void(int)> rec = [&](int from) {
    if (static_cast<int>(cur.size()) == r) {
      fn(cur);
      return;
    }
    for (int v = from; v <= b; ++v) {
      cur.push_back(v);
      rec(v + 1);
      cur.pop_back();
    }
  };
  if (r == 0) {
    fn(cur);
    return;
  }
  rec(a);
}

// Trapezoid nodes on the upward line D + i u t; weights include 1/(2 pi i).
// The extent is found by walking out until logmag(t) is decay below its peak.
ContourNodes scanned_line(double D, double u, double h, const std::function<double(double)>& logmag,
                          double decay) {
  double peak = logmag(0);
  int n = 0;
  for (;;) {
    ++n;
    if (n > 200000) throw truncation_error("line contour: integrand does not decay");
    const double f = logmag(n * h);
    peak = std::max(peak, f);
    if (f < peak - decay) break;
  }
  ContourNodes out;
  const double wgt = u * h / kTwoPi;
  for (int j = -n; j <= n; ++j) {
    out.z.emplace_back(D, u * j * h);
    out.c.emplace_back(wgt, 0.0);
  }
  return out;
}

// log of z^n e^(mu (z^2-1)/2 - xi (z-1)); the normalisation by G(1) cancels in every ratio used.
cplx log_g(int n, double mu, double xi, cplx z) {
  return static_cast<double>(n) * std::log(z) + 0.5 * mu * (z - 1.0) * (z + 1.0) - xi * (z - 1.0);
}

struct Geometry {
  double zline, wline, zrad, wrad;  // a01, b1 use all four; c2, c3 use zline/zrad
  double uz, uw;                    // t-scales of the lines (1 or N^(-1/3))
  double hz, hw;                    // steps in t
  int nz, nw;                       // circle node counts
};

// (1/2 pi i)^2 int_line dz int_circle dzeta e^{lz(z) - lzeta(zeta)} / (z - zeta), sampled on the line nodes.
std::vector<cplx> inner_circle(const ContourNodes& line, const ContourNodes& circ, const std::vector<cplx>& ginv) {
  std::vector<cplx> s(line.z.size());
  for (std::size_t a = 0; a < line.z.size(); ++a) {
    cplx acc = 0;
    for (std::size_t b = 0; b < circ.z.size(); ++b) acc += circ.c[b] * ginv[b] / (line.z[a] - circ.z[b]);
    s[a] = acc;
  }
  return s;
}

cplx kernel_on(FiniteKernel kind, const BrownianLppParams& bp, int ell, int k, const Geometry& g, double decay) {
  const int n1 = bp.n1, n2 = bp.n2, dn = bp.dn();
  const double mu1 = bp.mu1, xi1 = bp.xi1, dmu = bp.dmu(), dxi = bp.dxi();

  auto line = [&](double D, double u, double h, int n, double mu, double xi) {
    ContourNodes ln = scanned_line(
        D, u, h, [&](double t) { return log_g(n, mu, xi, cplx(D, u * t)).real(); }, decay);
    std::vector<cplx> gv(ln.z.size());
    for (std::size_t a = 0; a < gv.size(); ++a) gv[a] = std::exp(log_g(n, mu, xi, ln.z[a]));
    return std::pair{ln, gv};
  };
  auto circle = [&](double r, int nodes, int n, double mu, double xi) {
    ContourNodes cn = circle_nodes(r, nodes);
    std::vector<cplx> gi(cn.z.size());
    for (std::size_t b = 0; b < gi.size(); ++b) gi[b] = std::exp(-log_g(n, mu, xi, cn.z[b]));
    return std::pair{cn, gi};
  };

  if (kind == FiniteKernel::c2 || kind == FiniteKernel::c3) {
    const bool two = kind == FiniteKernel::c2;
    const double mu = two ? dmu : mu1, xi = two ? dxi : xi1;
    const int top = two ? n2 - k : ell - 1;
    const int bot = two ? n2 + 1 - ell : k;
    auto [ln, gv] = line(g.zline, g.uz, g.hz, top, mu, xi);
    auto [cn, gi] = circle(g.zrad, g.nz, bot, mu, xi);
    const std::vector<cplx> s = inner_circle(ln, cn, gi);
    cplx acc = 0;
    for (std::size_t a = 0; a < s.size(); ++a) acc += ln.c[a] * gv[a] * s[a];
    return acc;
  }

  const bool a = kind == FiniteKernel::a01;
  auto [lz, gz] = line(g.zline, g.uz, g.hz, a ? n1 : n1 + 1, mu1, xi1);
  auto [lw, gw] = line(g.wline, g.uw, g.hw, a ? dn : dn - 1, dmu, dxi);
  auto [cz, iz] = circle(g.zrad, g.nz, k, mu1, xi1);
  auto [cw, iw] = circle(g.wrad, g.nw, n2 + 1 - ell, dmu, dxi);
  const std::vector<cplx> sz = inner_circle(lz, cz, iz);
  const std::vector<cplx> sw = inner_circle(lw, cw, iw);
  std::vector<cplx> fz(sz.size()), fw(sw.size());
  for (std::size_t i = 0; i < sz.size(); ++i) fz[i] = lz.c[i] * gz[i] * sz[i];
  for (std::size_t j = 0; j < sw.size(); ++j) fw[j] = lw.c[j] * gw[j] * sw[j];
  cplx acc = 0;
  for (std::size_t i = 0; i < fz.size(); ++i) {
    cplx row = 0;
    for (std::size_t j = 0; j < fw.size(); ++j) row += fw[j] / (lz.z[i] - lw.z[j]);
    acc += fz[i] * row;
  }
  return acc;
}

void check_indices(const BrownianLppParams& bp, int ell, int k) {
  if (ell < 1 || ell > bp.n2 || k < 1 || k > bp.n2)
    throw argument_error("finite kernel: indices must lie in [1, n2]");
}

Geometry fixed_geometry(FiniteKernel kind, const FiniteKernelConfig& cfg) {
  Geometry g{};
  g.uz = g.uw = 1;
  g.nz = g.nw = cfg.circle_nodes;
  if (kind == FiniteKernel::c2 || kind == FiniteKernel::c3) {
    if (!(0 < cfg.tau && cfg.tau < cfg.D)) throw argument_error("finite kernel: need 0 < tau < D");
    g.zline = cfg.D;
    g.zrad = cfg.tau;
    g.hz = kTwoPi * (cfg.D - cfg.tau) / 36;
    return g;
  }
  if (!(0 < cfg.tau2 && cfg.tau2 < cfg.tau1 && cfg.tau1 < cfg.D1 && cfg.D1 < cfg.D2))
    throw argument_error("finite kernel: need 0 < tau2 < tau1 < D1 < D2");
  const double gap = std::min(cfg.D2 - cfg.D1, cfg.D1 - cfg.tau1);
  const bool a = kind == FiniteKernel::a01;
  g.zline = a ? cfg.D1 : cfg.D2;
  g.wline = a ? cfg.D2 : cfg.D1;
  g.zrad = cfg.tau1;
  g.wrad = cfg.tau2;
  g.hz = g.hw = kTwoPi * gap / 36;
  return g;
}

ContourKernel limit_kind(FiniteKernel k) {
  switch (k) {
    case FiniteKernel::a01: return ContourKernel::phi1;
    case FiniteKernel::b1: return ContourKernel::psi1;
    case FiniteKernel::c2: return ContourKernel::phi2;
    case FiniteKernel::c3: return ContourKernel::phi3;
  }
  return ContourKernel::phi1;
}

Geometry scaled_geometry(FiniteKernel kind, const ScalingEmbedding& emb, const FiniteKernelConfig& cfg) {
  const ContourKernel lk = limit_kind(kind);
  ContourSpec d = cfg.auto_offsets ? admissible_contour(emb.limit, lk) : cfg.offsets;
  const double u1 = 1 / std::cbrt(emb.N1), u2 = 1 / std::cbrt(emb.N2);
  const double h = cfg.scaled_step;
  auto nodes = [&](double u) {
    return std::max(cfg.circle_nodes, static_cast<int>(std::ceil(kTwoPi / (u * h))));
  };
  Geometry g{};
  g.hz = g.hw = h;
  if (kind == FiniteKernel::c2) {
    // w and omega live on the N2 window
    g.zline = 1 + d.d3 * u2;
    g.zrad = 1 - d.d4 * u2;
    g.uz = u2;
    g.nz = nodes(u2);
  } else if (kind == FiniteKernel::c3) {
    g.zline = 1 + d.d1 * u1;
    g.zrad = 1 - d.d2 * u1;
    g.uz = u1;
    g.nz = nodes(u1);
  } else {
    g.zline = 1 + d.d1 * u1;
    g.zrad = 1 - d.d2 * u1;
    g.wline = 1 + d.d3 * u2;
    g.wrad = 1 - d.d4 * u2;
    g.uz = u1;
    g.uw = u2;
    g.nz = nodes(u1);
    g.nw = nodes(u2);
  }
  if (g.zrad <= 0 || (kind != FiniteKernel::c2 && kind != FiniteKernel::c3 && g.wrad <= 0))
    throw argument_error("finite kernel: circle offset exceeds the window; increase M");
  return g;
}

double real_part(cplx v, const char* who) {
  if (std::abs(v.imag()) > 1e-8 * std::max(1.0, std::abs(v.real())))
    throw consistency_error(std::string(who) + ": imaginary part does not vanish");
  return v.real();
}

}  // namespace

// ---- geometric model ----

void GeomLppParams::validate() const {
  if (!(q > 0 && q < 1)) throw argument_error("q must lie in (0,1)");
  if (m1 < 1 || n1 < 1 || m2 <= m1 || n2 <= n1) throw argument_error("need 1 <= m1 < m2 and 1 <= n1 < n2");
}

double w_m(int m, int x, double q) {
  if (m < 1) throw argument_error("w_m: m must be >= 1");
  if (x < 0) return 0;
  return std::exp(m * std::log1p(-q) + log_binom(x + m - 1, x) + x * std::log(q));
}

double delta_k_w_m(int k, int m, int x, double q, const DeltaConfig& cfg) {
  if (m < 1) throw argument_error("delta_k_w_m: m must be >= 1");
  if (!(q > 0 && q < 1)) throw argument_error("delta_k_w_m: q must lie in (0,1)");
  const int e = x + k;  // the integrand carries z^-(e+1)
  if (e < 0) return 0;
  double r = cfg.radius;
  if (e > cfg.large_index) {
    const double a = m + std::max(-k, 0) + 1.0;
    r = std::clamp(e / (e + a), cfg.radius, 0.98);
  }
  const int n = std::max(cfg.min_nodes, static_cast<int>(std::ceil(45.0 / -std::log(r))) + e);
  cplx acc = 0;
  for (int j = 0; j < n; ++j) {
    const cplx z = std::polar(r, kTwoPi * j / n);
    acc += std::pow(1.0 - z, k) * std::pow(1.0 - q * z, -m) * std::pow(z, -e);
  }
  return std::pow(1 - q, m) * acc.real() / n;
}

namespace {
void check_weakly_increasing(const std::vector<int>& x, int n, const char* who) {
  if (static_cast<int>(x.size()) != n) throw argument_error(std::string(who) + ": length must be n");
  for (int i = 1; i < n; ++i)
    if (x[i] < x[i - 1]) throw argument_error(std::string(who) + ": sequence must be weakly increasing");
}
}  // namespace

double vector_prob(const std::vector<int>& x, int m, int n, double q, const DeltaConfig& cfg) {
  if (n < 1) throw argument_error("vector_prob: n must be >= 1");
  check_weakly_increasing(x, n, "vector_prob");
  std::vector<double> a(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a[i * n + j] = delta_k_w_m(j - i, m, x[j], q, cfg);
  return small_det(a, n);
}

double transition_prob(const std::vector<int>& x, const std::vector<int>& y, int ell, int m, int n, double q,
                       const DeltaConfig& cfg) {
  if (n < 1) throw argument_error("transition_prob: n must be >= 1");
  if (!(m > ell && ell >= 0)) throw argument_error("transition_prob: need m > ell >= 0");
  check_weakly_increasing(x, n, "transition_prob");
  check_weakly_increasing(y, n, "transition_prob");
  std::vector<double> a(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a[i * n + j] = delta_k_w_m(j - i, m - ell, y[j] - x[i], q, cfg);
  return small_det(a, n);
}

namespace {

// Calls fn(G, prob) for every weight array on rows x cols with entries in [0, cap];
// G is the row-major last-passage table, 1-based with a zero border.
template <class F>
void enumerate_box(int rows, int cols, int cap, double q, F&& fn) {
  const int cells = rows * cols;
  if (cap < 0) return;
  if (cells * std::log(cap + 1.0) > std::log(1e8)) throw unsupported_error("enumeration box too large");
  std::vector<double> pw(cap + 1);
  for (int x = 0; x <= cap; ++x) pw[x] = (1 - q) * std::pow(q, x);
  std::vector<int> w(cells, 0);
  std::vector<long long> G((rows + 1) * (cols + 1), 0);
  for (;;) {
    double pr = 1;
    for (int c = 0; c < cells; ++c) pr *= pw[w[c]];
    for (int i = 1; i <= rows; ++i)
      for (int j = 1; j <= cols; ++j) {
        const long long up = i > 1 ? G[(i - 1) * (cols + 1) + j] : 0, left = j > 1 ? G[i * (cols + 1) + j - 1] : 0;
        G[i * (cols + 1) + j] = std::max(up, left) + w[(i - 1) * cols + j - 1];
      }
    fn(G, pr);
    int c = 0;
    while (c < cells && w[c] == cap) w[c++] = 0;
    if (c == cells) return;
    ++w[c];
  }
}

}  // namespace

double joint_cdf_enumerate(const GeomLppParams& p, int v1, int v2) {
  p.validate();
  const int cols = p.n2 + 1;
  double acc = 0;
  enumerate_box(p.m2, p.n2, v2, p.q, [&](const std::vector<long long>& G, double pr) {
    if (G[p.m1 * cols + p.n1] <= v1 && G[p.m2 * cols + p.n2] <= v2) acc += pr;
  });
  return acc;
}

double vector_prob_enumerate(const std::vector<int>& x, int m, int n, double q) {
  check_weakly_increasing(x, n, "vector_prob_enumerate");
  if (m < 1) throw argument_error("vector_prob_enumerate: m must be >= 1");
  double acc = 0;
  enumerate_box(m, n, x[n - 1], q, [&](const std::vector<long long>& G, double pr) {
    for (int j = 1; j <= n; ++j)
      if (G[m * (n + 1) + j] != x[j - 1]) return;
    acc += pr;
  });
  return acc;
}

double transition_prob_enumerate(const std::vector<int>& x, const std::vector<int>& y, int ell, int m, int n,
                                 double q) {
  check_weakly_increasing(x, n, "transition_prob_enumerate");
  check_weakly_increasing(y, n, "transition_prob_enumerate");
  if (!(m > ell && ell >= 0)) throw argument_error("transition_prob_enumerate: need m > ell >= 0");
  double joint = 0, marg = 1;
  enumerate_box(m, n, y[n - 1], q, [&](const std::vector<long long>& G, double pr) {
    for (int j = 1; j <= n; ++j)
      if (G[m * (n + 1) + j] != y[j - 1] || (ell > 0 && G[ell * (n + 1) + j] != x[j - 1])) return;
    joint += pr;
  });
  if (ell == 0) {
    for (int v : x)
      if (v != 0) return 0;
  } else {
    marg = vector_prob_enumerate(x, ell, n, q);
  }
  if (marg == 0) throw argument_error("transition_prob_enumerate: conditioning event has probability 0");
  return joint / marg;
}

JointContourResult joint_cdf_contour_full(const GeomLppParams& p, int v1, int v2, const JointContourConfig& cfg) {
  p.validate();
  if (p.n2 > 3) throw unsupported_error("joint_cdf_contour: n2 <= 3 only");
  if (cfg.circle_nodes < 8) throw argument_error("joint_cdf_contour: too few circle nodes");
  const int n1 = p.n1, n2 = p.n2, dn = n2 - n1, m1 = p.m1, dm = p.m2 - p.m1;
  const double q = p.q;

  double s1 = cfg.s1, r1 = cfg.r1, r2 = cfg.r2, s2 = cfg.s2;
  if (s1 == 0 && r1 == 0 && r2 == 0 && s2 == 0) {
    r1 = 0.6;
    s2 = 0.6;
    r2 = 0.36;
    s1 = r1 * std::pow(0.6 / std::pow(s2 / r2, dn), 1.0 / n1);
  }
  if (!(0 < s1 && s1 < r1 && r1 < 1 && 0 < r2 && r2 < s2 && s2 < 1))
    throw argument_error("joint_cdf_contour: need 0 < s1 < r1 < 1 and 0 < r2 < s2 < 1");
  const double ratio = std::pow(s1 / r1, n1) * std::pow(s2 / r2, dn);
  if (!(ratio < 1)) throw argument_error("joint_cdf_contour: radii violate (r1/s1)^n1 > (s2/r2)^dn");

  int kmax = static_cast<int>(std::ceil(std::log(cfg.series_tol) / std::log(ratio))) + 1;
  kmax = std::min(kmax, cfg.max_series);

  // Powers of z/w alias once they reach the node count.
  const int N = std::max(cfg.circle_nodes, 8 * ((kmax + 71) / 8));
  if (N > 1024)
    throw argument_error("joint_cdf_contour: radii need " + std::to_string(kmax) +
                         " series terms; move s1 or s2 away from the (r1/s1)^n1 = (s2/r2)^dn boundary");

  // Pair integrals I_g(p, a, b), g = 0 for the first n1 variables, 1 for the rest.
  const int P = kmax + 2;
  std::vector<cplx> I[2];
  for (int g = 0; g < 2; ++g) {
    const double rz = g == 0 ? s1 : s2, rw = g == 0 ? r1 : r2;
    I[g].assign(static_cast<std::size_t>(P) * n2 * n2, 0.0);
    std::vector<cplx> zs(N), ws(N);
    for (int j = 0; j < N; ++j) {
      zs[j] = std::polar(rz, kTwoPi * j / N);
      ws[j] = std::polar(rw, kTwoPi * j / N);
    }
    for (int iz = 0; iz < N; ++iz) {
      const cplx z = zs[iz];
      const cplx bz = z / (std::pow(z, v1 + n1) * std::pow(1.0 - z, dn) * std::pow(1.0 - q * z, m1));
      for (int iw = 0; iw < N; ++iw) {
        const cplx w = ws[iw];
        const cplx bw = w / (std::pow(w, v2 - v1 + dn) * std::pow(1.0 - w, n1) * std::pow(1.0 - q * w, dm));
        cplx f = bz * bw / (double(N) * N);
        f *= g == 0 ? 1.0 / (w - z) : (1.0 - z) / ((z - w) * (1.0 - w));
        const cplx ratio_zw = z / w;
        cplx pa[3], pb[3];
        pa[0] = pb[0] = 1.0;
        for (int a = 1; a < n2; ++a) {
          pa[a] = pa[a - 1] * (z - 1.0);
          pb[a] = pb[a - 1] * (w - 1.0);
        }
        cplx rp = f;
        for (int pp = 0; pp < P; ++pp) {
          for (int a = 0; a < n2; ++a)
            for (int b = 0; b < n2; ++b) I[g][(static_cast<std::size_t>(pp) * n2 + a) * n2 + b] += rp * pa[a] * pb[b];
          rp *= ratio_zw;
        }
      }
    }
  }
  auto pair = [&](int g, int pp, int a, int b) { return I[g][(static_cast<std::size_t>(pp) * n2 + a) * n2 + b]; };

  const std::vector<Perm> perms = permutations(n2);
  cplx total = 0;
  for (int k = 0; k <= kmax; ++k) {
    cplx term = 0;
    for (int e = 0; e < 2; ++e) {
      cplx se = 0;
      for (const Perm& s : perms)
        for (const Perm& t : perms) {
          cplx prod = static_cast<double>(s.sign * t.sign);
          for (int j = 0; j < n2; ++j) {
            const int g = j < n1 ? 0 : 1;
            prod *= pair(g, k + (g == 0 ? e : 0), s.p[j], t.p[j]);
          }
          se += prod;
        }
      term += e == 0 ? se : -se;
    }
    total += term;
  }
  const double sgn = (n2 * (n2 - 1) / 2) % 2 ? -1.0 : 1.0;
  const double pref = std::exp(p.m2 * n2 * std::log1p(-q)) * sgn / (factorial(n1) * factorial(dn));
  total *= pref;

  JointContourResult res;
  res.value = total.real();
  res.imag = total.imag();
  res.series_terms = kmax + 1;
  res.radii = {s1, r1, r2, s2};
  if (std::abs(res.imag) > 1e-9) throw consistency_error("joint_cdf_contour: imaginary part exceeds 1e-9");
  return res;
}

double joint_cdf_contour(const GeomLppParams& p, int v1, int v2, const JointContourConfig& cfg) {
  return joint_cdf_contour_full(p, v1, v2, cfg).value;
}

// ---- Brownian finite-n formulas ----

void BrownianLppParams::validate() const {
  if (n1 < 1 || n2 <= n1) throw argument_error("need 1 <= n1 < n2");
  if (!(mu1 > 0 && mu2 > mu1)) throw argument_error("need 0 < mu1 < mu2");
  if (!std::isfinite(xi1) || !std::isfinite(xi2)) throw argument_error("xi must be finite");
}

double ScalingEmbedding::scale() const { return std::cbrt(N1); }
int ScalingEmbedding::ell_of(double x) const { return static_cast<int>(std::lround(bp.n1 + 1 + x * scale())); }
int ScalingEmbedding::k_of(double y) const { return static_cast<int>(std::lround(bp.n1 + y * scale())); }
double ScalingEmbedding::x_of(int ell) const { return (ell - bp.n1 - 1) / scale(); }
double ScalingEmbedding::y_of(int k) const { return (k - bp.n1) / scale(); }

ScalingEmbedding make_embedding(double M, double t1, double t2, double nu1, double nu2, double eta1, double eta2) {
  ScalingEmbedding e;
  e.M = M;
  e.t1 = t1;
  e.t2 = t2;
  e.nu1 = nu1;
  e.nu2 = nu2;
  e.eta1 = eta1;
  e.eta2 = eta2;
  e.limit = derive_params(t1, t2, nu1, nu2, eta1, eta2);
  if (!(M > 0) || !std::isfinite(M)) throw argument_error("embedding: M must be positive");
  e.N1 = t1 * M;
  e.N2 = (t2 - t1) * M;
  const double T2 = t2 * M;
  e.n1_real = e.N1 + nu1 * std::pow(e.N1, 2.0 / 3);
  e.n2_real = T2 + nu2 * std::pow(T2, 2.0 / 3);
  e.bp.n1 = static_cast<int>(std::lround(e.n1_real));
  e.bp.n2 = static_cast<int>(std::lround(e.n2_real));
  e.bp.mu1 = e.N1 - nu1 * std::pow(e.N1, 2.0 / 3);
  e.bp.mu2 = T2 - nu2 * std::pow(T2, 2.0 / 3);
  e.bp.xi1 = 2 * e.N1 + e.limit.lambda1 * std::cbrt(e.N1);
  e.bp.xi2 = 2 * T2 + e.limit.lambda2 * std::cbrt(T2);
  if (e.bp.n1 < 1 || e.bp.n2 <= e.bp.n1 + 1 || !(e.bp.mu1 > 0) || !(e.bp.mu2 > e.bp.mu1))
    throw argument_error("embedding: M too small for these parameters");
  return e;
}

void FiniteKernelConfig::validate() const {
  if (circle_nodes < 8) throw argument_error("finite kernel: too few circle nodes");
  if (!(line_decay > 0) || !(scaled_step > 0)) throw argument_error("finite kernel: bad step or decay");
  if (!auto_offsets) offsets.validate();
}

double finite_kernel(FiniteKernel kind, const BrownianLppParams& bp, int ell, int k, const FiniteKernelConfig& cfg) {
  bp.validate();
  cfg.validate();
  check_indices(bp, ell, k);
  return real_part(kernel_on(kind, bp, ell, k, fixed_geometry(kind, cfg), cfg.line_decay), "finite_kernel");
}

double finite_kernel(FiniteKernel kind, const ScalingEmbedding& emb, int ell, int k, const FiniteKernelConfig& cfg) {
  cfg.validate();
  check_indices(emb.bp, ell, k);
  if (!cfg.auto_offsets) check_contour(emb.limit, limit_kind(kind), cfg.offsets);
  return real_part(kernel_on(kind, emb.bp, ell, k, scaled_geometry(kind, emb, cfg), cfg.line_decay),
                   "finite_kernel");
}

namespace {
CompositeKernels assemble(int n1, int ell, int k, double a01, double b1, double c2, double c3, double a2s,
                          double a3s) {
  CompositeKernels ck;
  ck.a01 = a01;
  ck.b1 = b1;
  ck.c2 = c2;
  ck.c3 = c3;
  ck.a0 = a01 + (k > n1 ? c2 : 0.0) - (ell <= n1 ? c3 : 0.0);
  ck.b = -b1 - (k > n1 + 1 ? c2 : 0.0) + (ell <= n1 + 1 ? c3 : 0.0);
  ck.a2s = a2s;
  ck.a3s = a3s;
  return ck;
}
}  // namespace

CompositeKernels composite_kernels(const BrownianLppParams& bp, int ell, int k, const FiniteKernelConfig& cfg) {
  auto f = [&](FiniteKernel kind, int l, int kk) { return finite_kernel(kind, bp, l, kk, cfg); };
  const int n1 = bp.n1;
  CompositeKernels ck = assemble(n1, ell, k, f(FiniteKernel::a01, ell, k), f(FiniteKernel::b1, ell, k),
                                 f(FiniteKernel::c2, ell, k), f(FiniteKernel::c3, ell, k),
                                 f(FiniteKernel::c2, ell, n1), f(FiniteKernel::c3, n1 + 1, k));
  ck.a0_tilde = f(FiniteKernel::a01, ell, n1) + ck.a2s - (ell <= n1 ? f(FiniteKernel::c3, ell, n1) : 0.0);
  return ck;
}

CompositeKernels composite_kernels(const ScalingEmbedding& emb, int ell, int k, const FiniteKernelConfig& cfg) {
  auto f = [&](FiniteKernel kind, int l, int kk) { return finite_kernel(kind, emb, l, kk, cfg); };
  const int n1 = emb.bp.n1;
  CompositeKernels ck = assemble(n1, ell, k, f(FiniteKernel::a01, ell, k), f(FiniteKernel::b1, ell, k),
                                 f(FiniteKernel::c2, ell, k), f(FiniteKernel::c3, ell, k),
                                 f(FiniteKernel::c2, ell, n1), f(FiniteKernel::c3, n1 + 1, k));
  ck.a0_tilde = f(FiniteKernel::a01, ell, n1) + ck.a2s - (ell <= n1 ? f(FiniteKernel::c3, ell, n1) : 0.0);
  return ck;
}

// ---- kernel tables and the Q'(0) sums ----

double KernelTables::a0(int ell, int k) const {
  return at(a01, ell, k) + (k > n1 ? at(c2, ell, k) : 0.0) - (ell <= n1 ? at(c3, ell, k) : 0.0);
}
double KernelTables::b(int ell, int k) const {
  return -at(b1, ell, k) - (k > n1 + 1 ? at(c2, ell, k) : 0.0) + (ell <= n1 + 1 ? at(c3, ell, k) : 0.0);
}
double KernelTables::a2s(int ell) const { return at(c2, ell, n1); }
double KernelTables::a3s(int k) const { return at(c3, n1 + 1, k); }
double KernelTables::a0_tilde(int ell) const { return a0(ell, n1) + a2s(ell); }
double KernelTables::A0s(int ell, int k) const {
  return -((k == n1 + 1 ? 1.0 : 0.0) - a3s(k)) * ((ell == n1 ? 1.0 : 0.0) - a2s(ell));
}
double KernelTables::A(int ell, int k, double h) const { return a0(ell, k) + h * A0s(ell, k); }
double KernelTables::B(int ell, int k) const {
  return -(k == n1 + 1 && ell == n1 + 1 ? 1.0 : 0.0) + b(ell, k);
}

KernelTables kernel_tables(const BrownianLppParams& bp, const FiniteKernelConfig& cfg) {
  bp.validate();
  KernelTables kt;
  kt.n1 = bp.n1;
  kt.n2 = bp.n2;
  const std::size_t sz = static_cast<std::size_t>(bp.n2 + 1) * (bp.n2 + 1);
  kt.a01.assign(sz, 0.0);
  kt.b1.assign(sz, 0.0);
  kt.c2.assign(sz, 0.0);
  kt.c3.assign(sz, 0.0);
  for (int l = 1; l <= bp.n2; ++l)
    for (int k = 1; k <= bp.n2; ++k) {
      const std::size_t i = static_cast<std::size_t>(l) * (bp.n2 + 1) + k;
      kt.a01[i] = finite_kernel(FiniteKernel::a01, bp, l, k, cfg);
      kt.b1[i] = finite_kernel(FiniteKernel::b1, bp, l, k, cfg);
      kt.c2[i] = finite_kernel(FiniteKernel::c2, bp, l, k, cfg);
      kt.c3[i] = finite_kernel(FiniteKernel::c3, bp, l, k, cfg);
    }
  return kt;
}

namespace {

enum class RowType { b, a0, A0 };

struct Row {
  int label;
  RowType type;
};

// Entry of a block matrix; column -1 marks the special n1 column of V and U.
double entry(const KernelTables& kt, const Row& r, int col, bool special_col) {
  if (special_col) return r.type == RowType::b ? kt.b(r.label, kt.n1) : kt.a0_tilde(r.label);
  return r.type == RowType::b ? kt.b(r.label, col) : kt.a0(r.label, col);
}

double block_det(const KernelTables& kt, const std::vector<Row>& rows, const std::vector<int>& cols,
                 int special = -1) {
  const int m = static_cast<int>(rows.size());
  if (m == 0) return 1;
  std::vector<double> a(static_cast<std::size_t>(m) * m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) a[i * m + j] = entry(kt, rows[i], cols[j], j == special);
  return small_det(a, m);
}

std::vector<int> concat(std::initializer_list<const std::vector<int>*> parts) {
  std::vector<int> out;
  for (auto* p : parts) out.insert(out.end(), p->begin(), p->end());
  return out;
}

// Rows of M_0: c (b), c' (a0), d (a0), d' (b).
std::vector<Row> m0_rows(const std::vector<int>& c, const std::vector<int>& cp, const std::vector<int>& d,
                         const std::vector<int>& dp) {
  std::vector<Row> rows;
  for (int v : c) rows.push_back({v, RowType::b});
  for (int v : cp) rows.push_back({v, RowType::a0});
  for (int v : d) rows.push_back({v, RowType::a0});
  for (int v : dp) rows.push_back({v, RowType::b});
  return rows;
}

// det M_0 with row i and column j removed (1-based).
double m0_minor(const KernelTables& kt, std::vector<Row> rows, std::vector<int> cols, int i, int j) {
  rows.erase(rows.begin() + (i - 1));
  cols.erase(cols.begin() + (j - 1));
  return block_det(kt, rows, cols);
}

void check_small(int n1, int dn) {
  if (n1 < 1 || n1 > 2 || dn < 1 || dn > 2) throw unsupported_error("q_prime_expansion: needs n1 <= 2, n2 - n1 <= 2");
}

}  // namespace

QPrimeParts q_prime_expansion(const KernelTables& kt) {
  const int n1 = kt.n1, n2 = kt.n2, dn = n2 - n1;
  check_small(n1, dn);
  const int rmax = std::min(n1, dn);
  QPrimeParts out;
  using V = std::vector<int>;

  // Q'_1 and Q'_2: V and U differ in the type of the fixed row n1 + 1.
  for (int which = 0; which < 2; ++which) {
    double acc = 0;
    for (int r = which; r <= rmax; ++r)
      for (int s = 0; s <= n1; ++s)
        for (int t = 0; t <= dn - 1; ++t)
          for_each_tuple(r, 1, n1, [&](const V& c) {
            for_each_tuple(s, 1, n1, [&](const V& cp) {
              for_each_tuple(which == 0 ? r : r - 1, n1 + 2, n2, [&](const V& d) {
                for_each_tuple(t, n1 + 2, n2, [&](const V& dp) {
                  std::vector<Row> rows;
                  for (int v : c) rows.push_back({v, RowType::b});
                  for (int v : cp) rows.push_back({v, RowType::a0});
                  rows.push_back({n1 + 1, which == 0 ? RowType::b : RowType::a0});
                  for (int v : d) rows.push_back({v, RowType::a0});
                  for (int v : dp) rows.push_back({v, RowType::b});
                  V cols = concat({&c, &cp});
                  const int special = static_cast<int>(cols.size());
                  cols.push_back(n1);
                  cols.insert(cols.end(), d.begin(), d.end());
                  cols.insert(cols.end(), dp.begin(), dp.end());
                  acc += block_det(kt, rows, cols, special);
                });
              });
            });
          });
    out.part[which] = acc;
  }

  // Q'_3 and Q'_5: single a3* weight, row r + s removed.
  auto single = [&](int r, const V& c, const V& cp, const V& d, const V& dp) {
    const int s = static_cast<int>(cp.size());
    const std::vector<Row> rows = m0_rows(c, cp, d, dp);
    const V f = concat({&c, &cp, &d, &dp});
    const int L = static_cast<int>(f.size());
    double acc = 0;
    for (int j = 1; j <= L; ++j) {
      const double sg = (r + s + j) % 2 ? -1.0 : 1.0;
      acc += sg * kt.a3s(f[j - 1]) * m0_minor(kt, rows, f, r + s, j);
    }
    return acc;
  };
  // Q'_4 and Q'_6: a2* a3* weights over rows r+1..2r+s.
  auto dbl = [&](int r, const V& c, const V& cp, const V& d, const V& dp) {
    const int s = static_cast<int>(cp.size());
    const std::vector<Row> rows = m0_rows(c, cp, d, dp);
    const V f = concat({&c, &cp, &d, &dp});
    const int L = static_cast<int>(f.size());
    double acc = 0;
    for (int i = r + 1; i <= 2 * r + s; ++i)
      for (int j = 1; j <= L; ++j) {
        const double sg = (i + j + 1) % 2 ? -1.0 : 1.0;
        acc += sg * kt.a2s(f[i - 1]) * kt.a3s(f[j - 1]) * m0_minor(kt, rows, f, i, j);
      }
    return acc;
  };

  // Q'_3
  {
    double acc = 0;
    for (int r = 0; r <= rmax; ++r)
      for (int s = 1; s <= n1; ++s)
        for (int t = 1; t <= dn; ++t)
          for_each_tuple(r, 1, n1, [&](const V& c) {
            for_each_tuple(s, 1, n1, [&](const V& cp) {
              if (cp.back() != n1) return;
              for_each_tuple(r, n1 + 2, n2, [&](const V& d) {
                for_each_tuple(t, n1 + 1, n2, [&](const V& dp) {
                  if (dp.front() != n1 + 1) return;
                  acc += single(r, c, cp, d, dp);
                });
              });
            });
          });
    out.part[2] = acc;
  }
  // Q'_4
  {
    double acc = 0;
    for (int r = 0; r <= rmax; ++r)
      for (int s = 0; s <= n1; ++s) {
        if (r + s < 1) continue;
        for (int t = 1; t <= dn; ++t)
          for_each_tuple(r, 1, n1, [&](const V& c) {
            for_each_tuple(s, 1, n1, [&](const V& cp) {
              for_each_tuple(r, n1 + 2, n2, [&](const V& d) {
                for_each_tuple(t, n1 + 1, n2, [&](const V& dp) {
                  if (dp.front() != n1 + 1) return;
                  acc += dbl(r, c, cp, d, dp);
                });
              });
            });
          });
      }
    out.part[3] = acc;
  }
  // Q'_5
  {
    double acc = 0;
    for (int r = 1; r <= rmax; ++r)
      for (int s = 1; s <= n1; ++s)
        for (int t = 0; t <= dn; ++t)
          for_each_tuple(r, 1, n1, [&](const V& c) {
            for_each_tuple(s, 1, n1, [&](const V& cp) {
              if (cp.back() != n1) return;
              for_each_tuple(r, n1 + 1, n2, [&](const V& d) {
                if (d.front() != n1 + 1) return;
                for_each_tuple(t, n1 + 2, n2, [&](const V& dp) { acc += single(r, c, cp, d, dp); });
              });
            });
          });
    out.part[4] = acc;
  }
  // Q'_6
  {
    double acc = 0;
    for (int r = 1; r <= rmax; ++r)
      for (int s = 0; s <= n1; ++s)
        for (int t = 0; t <= dn; ++t)
          for_each_tuple(r, 1, n1, [&](const V& c) {
            for_each_tuple(s, 1, n1, [&](const V& cp) {
              for_each_tuple(r, n1 + 1, n2, [&](const V& d) {
                if (d.front() != n1 + 1) return;
                for_each_tuple(t, n1 + 2, n2, [&](const V& dp) { acc += dbl(r, c, cp, d, dp); });
              });
            });
          });
    out.part[5] = acc;
  }
  for (double v : out.part) out.total += v;
  return out;
}

QPrimeParts q_prime_expansion(const BrownianLppParams& bp, const FiniteKernelConfig& cfg) {
  bp.validate();
  check_small(bp.n1, bp.dn());
  return q_prime_expansion(kernel_tables(bp, cfg));
}

double q_block_sum(const KernelTables& kt, double h) {
  const int n1 = kt.n1, n2 = kt.n2, dn = n2 - n1;
  check_small(n1, dn);
  using V = std::vector<int>;
  double acc = 0;
  for (int r = 0; r <= std::min(n1, dn); ++r)
    for (int s = 0; s <= n1; ++s)
      for (int t = 0; t <= dn; ++t)
        for_each_tuple(r, 1, n1, [&](const V& c) {
          for_each_tuple(s, 1, n1, [&](const V& cp) {
            for_each_tuple(r, n1 + 1, n2, [&](const V& d) {
              for_each_tuple(t, n1 + 1, n2, [&](const V& dp) {
                const V f = concat({&c, &cp, &d, &dp});
                const int m = static_cast<int>(f.size());
                if (m == 0) {
                  acc += 1;
                  return;
                }
                std::vector<double> a(static_cast<std::size_t>(m) * m);
                for (int i = 0; i < m; ++i) {
                  const bool arow = i >= r && i < 2 * r + s;
                  for (int j = 0; j < m; ++j) a[i * m + j] = arow ? kt.A(f[i], f[j], h) : kt.B(f[i], f[j]);
                }
                acc += small_det(a, m);
              });
            });
          });
        });
  return acc;
}

namespace {
// Permutation product form: entries E(j; tau(j), sigma(j)); deriv selects which A-factor is differentiated (-1: none).
double perm_sum(const KernelTables& kt, double h, bool derivative) {
  const int n1 = kt.n1, n2 = kt.n2;
  const std::vector<Perm> perms = permutations(n2);
  double acc = 0;
  for (const Perm& s : perms)
    for (const Perm& t : perms) {
      const double sg = s.sign * t.sign;
      auto e = [&](int j, bool diff) {
        const int l = t.p[j] + 1, k = s.p[j] + 1;
        if (j < n1) {
          if (diff) return kt.A0s(l, k);
          return (l == k && l <= n1 ? 1.0 : 0.0) + kt.A(l, k, h);
        }
        return (l == k && l > n1 ? 1.0 : 0.0) + kt.B(l, k);
      };
      if (!derivative) {
        double prod = sg;
        for (int j = 0; j < n2; ++j) prod *= e(j, false);
        acc += prod;
      } else {
        for (int i = 0; i < n1; ++i) {
          double prod = sg;
          for (int j = 0; j < n2; ++j) prod *= e(j, j == i);
          acc += prod;
        }
      }
    }
  return acc / (factorial(n1) * factorial(n2 - n1));
}
}  // namespace

double q_permutation_sum(const KernelTables& kt, double h) { return perm_sum(kt, h, false); }
double q_prime_permutation(const KernelTables& kt) { return perm_sum(kt, 0.0, true); }

namespace {

struct DirectPairs {
  int n2 = 0;
  std::vector<double> cauchy, plain, second;  // n2 x n2, indices (a, b)
};

DirectPairs direct_pairs(const BrownianLppParams& bp, const DirectLineConfig& cfg) {
  bp.validate();
  if (bp.n2 > 4) throw unsupported_error("q_direct: n2 <= 4 only");
  if (!(cfg.d1 < cfg.d3 && cfg.d3 < 0 && cfg.d4 < cfg.d2 && cfg.d2 < 0))
    throw argument_error("q_direct: need d1 < d3 < 0 and d4 < d2 < 0");
  const int n1 = bp.n1, n2 = bp.n2, dn = bp.dn();
  const double mu1 = bp.mu1, xi1 = bp.xi1, dmu = bp.dmu(), dxi = bp.dxi();
  const double gap = std::min({cfg.d3 - cfg.d1, cfg.d2 - cfg.d4, -cfg.d3, -cfg.d2});
  const double h = kTwoPi * gap / 36;

  auto exp_part = [](double mu, double xi, cplx z) { return 0.5 * mu * z * z - xi * z; };
  auto line = [&](double D, double mu, double xi) {
    return scanned_line(
        D, 1.0, h,
        [&](double t) {
          const cplx z(D, t);
          return exp_part(mu, xi, z).real() + n2 * std::log(std::abs(z));
        },
        cfg.decay);
  };

  DirectPairs out;
  out.n2 = n2;
  out.cauchy.assign(n2 * n2, 0.0);
  out.plain.assign(n2 * n2, 0.0);
  out.second.assign(n2 * n2, 0.0);

  // first group: z on d1, w on d3
  {
    const ContourNodes lz = line(cfg.d1, mu1, xi1), lw = line(cfg.d3, dmu, dxi);
    for (int a = 0; a < n2; ++a)
      for (int b = 0; b < n2; ++b) {
        cplx cz = 0, cw = 0, cc = 0;
        std::vector<cplx> fw(lw.z.size());
        for (std::size_t j = 0; j < lw.z.size(); ++j) {
          fw[j] = lw.c[j] * std::exp(exp_part(dmu, dxi, lw.z[j])) * std::pow(lw.z[j], b - n1);
          cw += fw[j];
        }
        for (std::size_t i = 0; i < lz.z.size(); ++i) {
          const cplx fz = lz.c[i] * std::exp(exp_part(mu1, xi1, lz.z[i])) * std::pow(lz.z[i], a - dn);
          cz += fz;
          cplx row = 0;
          for (std::size_t j = 0; j < lw.z.size(); ++j) row += fw[j] / (lz.z[i] - lw.z[j]);
          cc += fz * row;
        }
        out.cauchy[a * n2 + b] = real_part(cc, "q_direct");
        out.plain[a * n2 + b] = real_part(cz * cw, "q_direct");
      }
  }
  // second group: z on d2, w on d4
  {
    const ContourNodes lz = line(cfg.d2, mu1, xi1), lw = line(cfg.d4, dmu, dxi);
    for (int a = 0; a < n2; ++a)
      for (int b = 0; b < n2; ++b) {
        std::vector<cplx> fw(lw.z.size());
        for (std::size_t j = 0; j < lw.z.size(); ++j)
          fw[j] = lw.c[j] * std::exp(exp_part(dmu, dxi, lw.z[j])) * std::pow(lw.z[j], b - n1 - 1);
        cplx cc = 0;
        for (std::size_t i = 0; i < lz.z.size(); ++i) {
          const cplx fz = lz.c[i] * std::exp(exp_part(mu1, xi1, lz.z[i])) * std::pow(lz.z[i], a - dn + 1);
          cplx row = 0;
          for (std::size_t j = 0; j < lw.z.size(); ++j) row += fw[j] / (lw.z[j] - lz.z[i]);
          cc += fz * row;
        }
        out.second[a * n2 + b] = real_part(cc, "q_direct");
      }
  }
  return out;
}

double direct_sum(const BrownianLppParams& bp, const DirectPairs& dp, double h, bool derivative) {
  const int n1 = bp.n1, n2 = bp.n2;
  const std::vector<Perm> perms = permutations(n2);
  double acc = 0;
  for (const Perm& s : perms)
    for (const Perm& t : perms) {
      const double sg = s.sign * t.sign;
      auto f = [&](int j, bool diff) {
        const int idx = s.p[j] * n2 + t.p[j];
        if (j >= n1) return dp.second[idx];
        if (diff) return -dp.plain[idx];
        return dp.cauchy[idx] - h * dp.plain[idx];
      };
      if (!derivative) {
        double prod = sg;
        for (int j = 0; j < n2; ++j) prod *= f(j, false);
        acc += prod;
      } else {
        for (int i = 0; i < n1; ++i) {
          double prod = sg;
          for (int j = 0; j < n2; ++j) prod *= f(j, j == i);
          acc += prod;
        }
      }
    }
  const double sgn = (n2 * (n2 - 1) / 2) % 2 ? -1.0 : 1.0;
  return sgn * acc / (factorial(n1) * factorial(n2 - n1));
}

}  // namespace

double q_direct(const BrownianLppParams& bp, double h, const DirectLineConfig& cfg) {
  return direct_sum(bp, direct_pairs(bp, cfg), h, false);
}

double q_prime_direct(const BrownianLppParams& bp, const DirectLineConfig& cfg) {
  return direct_sum(bp, direct_pairs(bp, cfg), 0.0, true);
}

double rescaled_kernel_error(const ScalingEmbedding& emb, FiniteKernel which, double x, double y,
                             const FiniteKernelConfig& cfg) {
  if (emb.M < 10) throw argument_error("rescaled_kernel_error: M must be >= 10");
  const int ell = emb.ell_of(x), k = emb.k_of(y);
  const double xs = emb.x_of(ell), ys = emb.y_of(k);
  const double v = emb.scale() * finite_kernel(which, emb, ell, k, cfg);
  double lim = 0;
  switch (which) {
    case FiniteKernel::a01: lim = phi1(emb.limit, xs, ys); break;
    case FiniteKernel::b1: lim = psi1(emb.limit, xs, ys); break;
    case FiniteKernel::c2: lim = phi2(emb.limit, xs, ys); break;
    case FiniteKernel::c3: lim = phi3(emb.limit, xs, ys); break;
  }
  return std::abs(v - lim);
}

double rescaled_kernel_error(double M, FiniteKernel which, double x, double y) {
  return rescaled_kernel_error(make_embedding(M, 1, 2, 0, 0, 0, 0), which, x, y);
}

}  // namespace kpz
