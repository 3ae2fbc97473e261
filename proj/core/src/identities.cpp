#include "kpz/identities.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace kpz {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;
constexpr double kTiny = 1e-8;

void guard(cplx d, const char* what) {
  if (!(std::abs(d) > kTiny)) throw singular_configuration(std::string("singular configuration: ") + what);
}

std::vector<std::vector<int>> all_perms(int n, std::vector<int>& signs) {
  std::vector<int> p(n);
  for (int i = 0; i < n; ++i) p[i] = i;
  std::vector<std::vector<int>> out;
  signs.clear();
  do {
    int inv = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) inv += p[i] > p[j];
    out.push_back(p);
    signs.push_back(inv % 2 ? -1 : 1);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

cplx vandermonde(const std::vector<cplx>& w) {
  cplx v = 1;
  for (std::size_t j = 0; j < w.size(); ++j)
    for (std::size_t k = j + 1; k < w.size(); ++k) v *= w[k] - w[j];
  return v;
}

IdentityReport make_report(const char* name, int n, double err, double threshold) {
  IdentityReport r;
  r.name = name;
  r.n = n;
  r.points_tested = 1;
  r.max_rel_err = err;
  r.threshold = threshold;
  r.pass = err < threshold;
  return r;
}

void check_size(std::size_t n, std::size_t lo, std::size_t hi, const char* who) {
  if (n < lo || n > hi) throw argument_error(std::string(who) + ": size out of range");
}

}  // namespace

double rel_err(cplx lhs, cplx rhs) {
  return std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1e-300});
}

IdentityReport check_tw_symmetrization(const std::vector<cplx>& w, double threshold) {
  const int n = static_cast<int>(w.size());
  check_size(w.size(), 1, 6, "check_tw_symmetrization");
  for (int i = 0; i < n; ++i) {
    guard(w[i], "w_j = 0");
    for (int j = i + 1; j < n; ++j) guard(w[i] - w[j], "repeated point");
  }
  std::vector<int> sg;
  const auto perms = all_perms(n, sg);
  cplx lhs = 0;
  for (std::size_t s = 0; s < perms.size(); ++s) {
    cplx term = static_cast<double>(sg[s]);
    cplx partial = 1;
    for (int j = 0; j < n; ++j) {
      const cplx v = w[perms[s][j]];
      term *= std::pow((1.0 - v) / v, j + 1);
      partial *= v;
      guard(1.0 - partial, "partial product equals 1");
      term /= 1.0 - partial;
    }
    lhs += term;
  }
  cplx rhs = vandermonde(w) * ((n * (n - 1) / 2) % 2 ? -1.0 : 1.0);
  for (const cplx& v : w) rhs /= std::pow(v, n);
  return make_report("tw_symmetrization", n, rel_err(lhs, rhs), threshold);
}

IdentityReport check_double_symmetrization(const std::vector<cplx>& z, const std::vector<cplx>& w, double threshold) {
  const int n = static_cast<int>(z.size());
  check_size(z.size(), 1, 5, "check_double_symmetrization");
  if (w.size() != z.size()) throw argument_error("check_double_symmetrization: z and w differ in length");
  for (int i = 0; i < n; ++i) {
    guard(z[i], "z_j = 0");
    guard(1.0 - w[i], "w_j = 1");
    for (int j = 0; j < n; ++j) guard(w[j] - z[i], "z_i = w_j");
  }
  std::vector<int> sg;
  const auto perms = all_perms(n, sg);
  // per-point factors a(z) = (1-z)/z and b(w) = w/(1-w)
  cplx lhs = 0;
  for (std::size_t s1 = 0; s1 < perms.size(); ++s1)
    for (std::size_t s2 = 0; s2 < perms.size(); ++s2) {
      cplx term = static_cast<double>(sg[s1] * sg[s2]);
      cplx ratio = 1;
      for (int j = 0; j < n; ++j) {
        const cplx zz = z[perms[s1][j]], ww = w[perms[s2][j]];
        term *= std::pow(ww * (1.0 - zz) / (zz * (1.0 - ww)), j + 1);
        ratio *= zz / ww;
        guard(1.0 - ratio, "partial ratio equals 1");
        term /= 1.0 - ratio;
      }
      lhs += term;
    }
  Eigen::MatrixXcd c(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) c(i, j) = 1.0 / (w[j] - z[i]);
  cplx rhs = c.determinant();
  for (int j = 0; j < n; ++j)
    rhs *= std::pow(w[j], n + 1) * std::pow(1.0 - z[j], n) / (std::pow(z[j], n) * std::pow(1.0 - w[j], n));
  return make_report("double_symmetrization", n, rel_err(lhs, rhs), threshold);
}

IdentityReport check_residue_identity(const std::vector<cplx>& z, const std::vector<cplx>& w, double threshold,
                                      const ResidueCheckConfig& cfg) {
  const int n = static_cast<int>(z.size());
  check_size(z.size(), 1, 4, "check_residue_identity");
  if (w.size() != z.size()) throw argument_error("check_residue_identity: z and w differ in length");
  double zmax = 0, wmax = 0;
  for (int i = 0; i < n; ++i) {
    guard(z[i], "z_j = 0");
    guard(1.0 - w[i], "w_j = 1");
    zmax = std::max(zmax, std::abs(z[i]));
    wmax = std::max(wmax, std::abs(w[i]));
    for (int j = 0; j < n; ++j) {
      guard(w[j] - z[i], "z_i = w_j");
      if (j != i) {
        guard(z[j] - z[i], "repeated z");
        guard(w[j] - w[i], "repeated w");
      }
    }
  }

  // double sum over k, l
  cplx lhs = 0;
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) {
      cplx t = (1.0 - z[k]) / (z[k] * (1.0 - w[l]) * (w[l] - z[k]));
      for (int j = 0; j < n; ++j) {
        t *= (w[l] - z[j]) * (w[j] - z[k]);
        if (j != l) t /= w[l] - w[j];
        if (j != k) t /= z[k] - z[j];
      }
      lhs += t;
    }
  if ((n - 1) % 2) lhs = -lhs;
  cplx pz = 1, pw = 1, p1 = 1;
  for (int j = 0; j < n; ++j) {
    pz *= w[j] * (1.0 - z[j]) / (z[j] * (1.0 - w[j]));
    p1 *= (1.0 - z[j]) / (1.0 - w[j]);
    pw *= z[j] / w[j];
  }
  const cplx rhs = pz * (1.0 - pw);
  double err = std::max(rel_err(lhs, rhs), rel_err(rhs, pz - p1));

  // double circle integral
  double r1 = cfg.r1, r2 = cfg.r2;
  if (r1 == 0 && r2 == 0) {
    r1 = 1.25 * zmax;
    r2 = std::max(1.25 * wmax, 1.25 * r1);
  }
  if (!(zmax < r1 && r1 < r2 && wmax < r2 && r2 < 1))
    throw singular_configuration("check_residue_identity: no radii with |z_j| < r1 < r2 < 1 and |w_j| < r2");
  const int N = cfg.nodes;
  std::vector<cplx> zs(N), ws(N);
  for (int a = 0; a < N; ++a) {
    zs[a] = std::polar(r1, kTwoPi * a / N);
    ws[a] = std::polar(r2, kTwoPi * a / N);
  }
  cplx integral = 0;
  for (int a = 0; a < N; ++a) {
    const cplx zz = zs[a];
    cplx row = 0;
    for (int b = 0; b < N; ++b) {
      const cplx ww = ws[b];
      cplx f = (1.0 - zz) / (zz * (1.0 - ww) * (ww - zz));
      for (int j = 0; j < n; ++j) f *= (ww - z[j]) * (w[j] - zz) / ((ww - w[j]) * (zz - z[j]));
      row += f * ww;
    }
    integral += row * zz;
  }
  integral /= static_cast<double>(N) * N;
  err = std::max(err, rel_err(integral, n % 2 ? -p1 : p1));
  return make_report("residue_identity", n, err, threshold);
}

IdentityReport check_airy_contour(double A, double B, AiryContourSide side, double D, double threshold) {
  if (!(D > 0)) throw domain_error("check_airy_contour: need D > 0");
  const AiryContourPair v = airy_gaussian_contour_both(A, B, side, D);
  const double err = std::max(rel_err(v.numeric, v.closed), std::abs(v.numeric_imag) / std::max(std::abs(v.closed), 1e-300));
  return make_report(side == AiryContourSide::raising ? "airy_contour_raising" : "airy_contour_lowering", 0, err,
                     threshold);
}

std::vector<cplx> sample_annulus(std::uint64_t seed, int n, double rmin, double rmax) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> rad(rmin, rmax), ang(0, kTwoPi);
  std::vector<cplx> out(n);
  for (auto& u : out) {
    const double r = rad(rng);
    u = std::polar(r, ang(rng));
  }
  return out;
}

namespace {

void fold(IdentityReport& acc, const IdentityReport& r) {
  if (acc.points_tested == 0) {
    acc = r;
    return;
  }
  acc.points_tested += r.points_tested;
  acc.max_rel_err = std::max(acc.max_rel_err, r.max_rel_err);
  acc.pass = acc.pass && r.pass;
}

template <class F>
IdentityReport repeat(int draws, std::uint64_t seed, F&& one) {
  IdentityReport acc;
  std::uint64_t s = seed;
  for (int d = 0; d < draws; ++d) {
    for (int tries = 0;; ++tries) {
      try {
        fold(acc, one(s++));
        break;
      } catch (const singular_configuration&) {
        if (tries > 100) throw;
      }
    }
  }
  return acc;
}

}  // namespace

std::vector<IdentityReport> run_identity_suite(const IdentitySuiteConfig& cfg) {
  std::vector<IdentityReport> out;
  const std::uint64_t base = cfg.seed;
  for (int n = 1; n <= 4; ++n)
    out.push_back(repeat(cfg.draws, base + 1000 * n, [&](std::uint64_t s) {
      return check_tw_symmetrization(sample_annulus(s, n, 0.2, 0.8));
    }));
  for (int n = 1; n <= 5; ++n) {
    const int draws = n <= 3 ? cfg.draws : (n == 4 ? 5 : 2);
    out.push_back(repeat(draws, base + 2000 * n + 17, [&](std::uint64_t s) {
      return check_double_symmetrization(sample_annulus(s, n, 0.1, 0.4), sample_annulus(s ^ 0x9e3779b9ULL, n, 0.45, 0.9));
    }));
  }
  for (int n = 1; n <= 2; ++n)
    out.push_back(repeat(cfg.draws, base + 3000 * n + 31, [&](std::uint64_t s) {
      return check_residue_identity(sample_annulus(s, n, 0.1, 0.4), sample_annulus(s ^ 0x51ed27ULL, n, 0.1, 0.6));
    }));
  for (AiryContourSide side : {AiryContourSide::raising, AiryContourSide::lowering}) {
    std::mt19937_64 rng(base + 4000 + static_cast<int>(side));
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    IdentityReport acc;
    for (int d = 0; d < 20; ++d) {
      const double A = u(rng), B = u(rng);
      for (double D : {0.5, 1.0, 2.0}) fold(acc, check_airy_contour(A, B, side, D));
    }
    out.push_back(acc);
  }
  return out;
}

}  // namespace kpz
