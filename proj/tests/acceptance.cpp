#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "kpz/identities.hpp"
#include "kpz/kernels.hpp"
#include "kpz/parallel.hpp"
#include "kpz/prelimit.hpp"
#include "kpz/quad.hpp"
#include "kpz/sim.hpp"
#include "kpz/specfun.hpp"
#include "kpz/tw.hpp"
#include "kpz/twotime.hpp"
#include "oracles.hpp"
#include "suites.hpp"

using namespace kpz;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  double limit_s;   // 0: no runtime limit
  std::function<Outcome()> run;
};

Outcome from_rows(const std::vector<kpzcli::CheckRow>& rows) {
  Outcome o{kpzcli::all_pass(rows), ""};
  for (const auto& r : rows) {
    if (!o.detail.empty()) o.detail += "; ";
    o.detail += fmt::format("{}{}:{:.2e}{}", r.name, r.n ? fmt::format("[{}]", r.n) : "", r.max_err,
                            r.pass ? "" : " (" + r.detail + ")");
  }
  return o;
}

// ---- 1 ----
Outcome identities() {
  const auto rows = kpzcli::suite_identities();
  Outcome o = from_rows(rows);
  for (const auto& r : rows) o.pass = o.pass && r.points >= 1;
  return o;
}

// ---- 2 ----
Outcome airy_layer() {
  double e_ai = 0;
  for (int i = 0; i <= 400; ++i) {
    const double x = -2 + 0.01 * i;
    double a, ap;
    oracle::airy_series(x, a, ap);
    e_ai = std::max({e_ai, std::abs(airy_ai(x) - a), std::abs(airy_ai_prime(x) - ap)});
  }
  double e_k = 0, e_sym = 0;
  for (int i = -2; i <= 2; ++i)
    for (int j = -2; j <= 2; ++j) {
      e_k = std::max(e_k, std::abs(airy_kernel(i, j) - airy_kernel_quadrature(i, j)));
      e_sym = std::max(e_sym, std::abs(airy_kernel(i + 0.3, j - 0.1) - airy_kernel(j - 0.1, i + 0.3)));
    }
  return {e_ai < 1e-12 && e_k < 1e-10 && e_sym < 1e-14,
          fmt::format("series {:.2e}; quadrature {:.2e}; symmetry {:.2e}", e_ai, e_k, e_sym)};
}

// ---- 3 ----
Outcome airy_contour() {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  double dual = 0, dinv = 0;
  for (int i = 0; i < 20; ++i) {
    const double A = u(rng), B = u(rng);
    for (auto side : {AiryContourSide::raising, AiryContourSide::lowering}) {
      double lo = INFINITY, hi = -INFINITY;
      for (double D : {0.5, 1.0, 2.0}) {
        const auto r = airy_gaussian_contour_both(A, B, side, D);
        dual = std::max(dual, std::abs(r.numeric - r.closed) / std::max(1.0, std::abs(r.closed)));
        lo = std::min(lo, r.numeric);
        hi = std::max(hi, r.numeric);
      }
      dinv = std::max(dinv, hi - lo);
    }
  }
  return {dual < 1e-9 && dinv < 1e-10, fmt::format("dual {:.2e}; D-invariance {:.2e}", dual, dinv)};
}

// ---- 4 ----
Outcome f2() {
  FredholmSpec fine;
  fine.nystrom_nodes = 120;
  double dbl = 0, prev = -1;
  bool mono = true;
  for (int eta = -4; eta <= 2; ++eta) {
    const double a = f2_cdf(eta), b = f2_cdf(eta, fine);
    dbl = std::max(dbl, std::abs(a - b));
    mono = mono && a > prev;
    prev = a;
  }
  const double top = std::abs(f2_cdf(8) - 1);
  return {dbl < 1e-8 && top < 1e-9 && mono,
          fmt::format("doubling {:.2e}; |F2(8)-1| {:.2e}; {}", dbl, top, mono ? "monotone" : "NOT monotone")};
}

// ---- 6 ----
Outcome prelimit_exact() {
  auto rows = kpzcli::suite_prelimit();
  std::erase_if(rows, [](const kpzcli::CheckRow& r) { return r.name.starts_with("q_"); });
  return from_rows(rows);
}

// ---- 8 ----
Outcome ftt_limits() {
  bool pass = true;
  std::string d;
  auto one = [&](double e1s, double e2, double ref, const char* tag) {
    const auto r = ftt(derive_params(1, 2, 0, 0, 0, e2), e1s);
    const double gap = std::abs(r.value - ref), tol = std::max(1e-2, 3 * r.trunc_bound);
    pass = pass && gap < tol;
    d += fmt::format("{}({:g},{:g}) gap {:.2e}/{:.2e}; ", tag, e1s, e2, gap, tol);
    return r;
  };
  for (double e2 : {-1.0, 0.0, 1.0}) one(8, e2, f2_cdf(e2), "F2(eta2)");
  for (double e1s : {-1.0, 0.0, 1.0}) one(e1s, 8, f2_cdf(e1s), "F2(eta1*)");
  // shells at zero offsets
  const auto z = ftt(derive_params(1, 2, 0, 0, 0, 0), 0.0);
  bool dec = z.shell_abs.size() >= 3;
  for (std::size_t i = 1; dec && i < 3; ++i) dec = z.shell_abs[i] < z.shell_abs[i - 1];
  pass = pass && dec;
  d += "shells";
  for (double s : z.shell_abs) d += fmt::format(" {:.3e}", s);
  if (!dec) d += " NOT decreasing";
  return {pass, d};
}

// ---- 9 ----
double halving_dt = 0;   // absolute dt accepted at M = 200, reused by 10

double ks_f2(const std::vector<double>& h, double M) {
  std::vector<double> x(h.size());
  const double s = std::cbrt(M);
  for (std::size_t i = 0; i < h.size(); ++i) x[i] = (h[i] - 2 * M) / s;
  return ks_one_sample(x, [](double e) { return f2_cdf(e); });
}

// sup |P(X_M <= s) - F2(s)| under the exact finite law
double exact_ks(int n) {
  const double sc = std::cbrt(static_cast<double>(n));
  double d = 0;
  for (double x = -6; x <= 4; x += 0.02) d = std::max(d, std::abs(gue_finite_cdf(n, n, 2.0 * n + x * sc) - f2_cdf(x)));
  return d;
}

Outcome mc_single() {
  std::string d;
  std::vector<double> ks;
  for (double M : {50.0, 200.0}) {
    SimConfig c;
    c.seed = 9000 + static_cast<std::uint64_t>(M);
    c.dt_fraction = 8e-3;
    const auto h = choose_dt_by_halving(M, static_cast<int>(M), 30000, 0.01, c);
    ks.push_back(ks_f2({h.samples.begin(), h.samples.begin() + 10000}, M));
    d += fmt::format("M={:g} dt={:.3g} (halving KS {:.4f}) KS={:.4f} (exact finite-n {:.4f}); ", M, h.dt,
                     h.history.back().ks_to_next, ks.back(), exact_ks(static_cast<int>(M)));
    if (M == 200) halving_dt = h.dt;
  }
  if (!(ks[1] < ks[0])) d += "NOT decreasing";
  return {ks[1] < 0.05 && ks[1] < ks[0], d};
}

// ---- 10 ----
Outcome mc_two_time() {
  const double M = 200;
  const auto emb = make_embedding(M, 1, 2, 0, 0, 0, 0);
  SimConfig c;
  c.seed = 10001;
  c.dt_fraction = (halving_dt > 0 ? halving_dt : 8e-3 * M) / emb.bp.mu2;
  const auto s = simulate_joint(emb, 20000, c);
  std::vector<std::pair<double, double>> pts;
  for (const auto& j : s) pts.emplace_back(j.x, j.y);
  const EmpiricalCdf2D F(std::move(pts));

  bool pass = true;
  std::string d = fmt::format("dt={:.3g}\n", c.dt_fraction * emb.bp.mu2);
  d += fmt::format("      {:>6} {:>6} {:>9} {:>9} {:>9} {:>8} {:>8} {:>8}  {}\n", "eta1*", "eta2", "empirical", "F_tt",
                   "gap", "se", "bound", "tol", "ok");
  for (double e1 : {-1.0, 0.0, 1.0})
    for (double e2 : {-1.0, 0.0, 1.0}) {
      const auto r = ftt(derive_params(1, 2, 0, 0, 0, e2), e1);
      const double emp = F(e1, e2), se = F.std_error(e1, e2), gap = std::abs(emp - r.value);
      const double tol = 0.08 + 3 * (se + r.trunc_bound);
      pass = pass && gap < tol;
      d += fmt::format("      {:>6g} {:>6g} {:>9.5f} {:>9.5f} {:>9.5f} {:>8.5f} {:>8.1e} {:>8.5f}  {}\n", e1, e2, emp,
                       r.value, gap, se, r.trunc_bound, tol, gap < tol ? "yes" : "NO");
    }
  d.pop_back();
  return {pass, d};
}

// ---- 11 ----
Outcome q_prime_mc() {
  const double xi2 = 1.0;
  std::vector<double> grid(9);
  for (int i = 0; i < 9; ++i) grid[i] = -2 + 0.5 * i;

  const auto gl = gauss_legendre(8);
  std::vector<double> integral(8);
  for (int i = 0; i < 8; ++i) {
    const double a = grid[i], b = grid[i + 1];
    double acc = 0;
    for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
      const double xi1 = 0.5 * (a + b) + 0.5 * (b - a) * gl.nodes[k];
      acc += gl.weights[k] * q_prime_expansion(BrownianLppParams{1, 2, 1, 2, xi1, xi2}).total;
    }
    integral[i] = 0.5 * (b - a) * acc;
  }

  const int N = 100000;
  std::vector<JointH> h(N);
  parallel_for(N, [&](std::size_t i) {
    const BrownianField f = make_joint_field(2, 1, 2, 2e-3, 11011, i);
    h[i] = sample_joint(f, 1, 1, 2, 2);
  });

  bool pass = true;
  double worst = 0;
  for (int i = 0; i < 8; ++i) {
    int cnt = 0;
    for (const auto& v : h) cnt += v.h1 > grid[i] && v.h1 <= grid[i + 1] && v.h2 <= xi2;
    const double p = static_cast<double>(cnt) / N, se = std::sqrt(std::max(p * (1 - p), 1.0 / N) / N);
    const double z = std::abs(p - integral[i]) / se;
    worst = std::max(worst, z);
    pass = pass && z < 3;
  }
  return {pass, fmt::format("8 intervals on [-2,2], xi2={:g}; worst |diff|/se = {:.2f}", xi2, worst)};
}

// ---- 12 ----
Outcome deta() {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> t(0.1, 5), nu(-2, 2), eta(-4, 4);
  double e = 0;
  for (int i = 0; i < 1000; ++i) {
    const double t1 = t(rng), t2 = t1 + t(rng), n1 = nu(rng), n2 = nu(rng), e1 = eta(rng), e2 = eta(rng);
    const auto p = derive_params(t1, t2, n1, n2, e1, e2);
    e = std::max(e, std::abs(p.deta - deta_direct(t1, t2, n1, n2, e1, e2)) / std::max(1.0, std::abs(p.deta)));
  }
  return {e < 1e-13, fmt::format("max rel {:.2e}", e)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kpz acceptance criteria"};
  std::vector<int> only, known_red;
  app.add_option("--only", only, "run only these criteria");
  app.add_option("--known-red", known_red,
                 "criteria expected to fail; exit 0 only when the failing set equals this list");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all = {
      {1, "identity suite", 60, identities},
      {2, "Airy layer", 0, airy_layer},
      {3, "Airy contour identities", 0, airy_contour},
      {4, "F2 Fredholm determinant", 5, f2},
      {5, "kernel dual paths", 120, [] { return from_rows(kpzcli::suite_kernels_dual()); }},
      {6, "finite-size exact oracle", 120, prelimit_exact},
      {7, "rescaled kernel convergence", 600, [] { return from_rows(kpzcli::suite_convergence()); }},
      {8, "F_tt structural limits", 1800, ftt_limits},
      {9, "Monte Carlo single time", 600, mc_single},
      {10, "Monte Carlo two time", 3600, mc_two_time},
      {11, "Q' integral vs Monte Carlo", 0, q_prime_mc},
      {12, "delta eta two ways", 1, deta},
  };

  std::set<int> failed;
  for (const auto& c : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0 && sec > c.limit_s) {
      o.pass = false;
      o.detail += fmt::format(" (over {:g} s)", c.limit_s);
    }
    if (!o.pass) failed.insert(c.id);
    fmt::print("{} criterion {:>2} {} [{:.1f} s]: {}\n", o.pass ? "PASS" : "FAIL", c.id, c.title, sec, o.detail);
    std::fflush(stdout);
  }

  std::set<int> expected;
  for (int k : known_red)
    if (only.empty() || std::find(only.begin(), only.end(), k) != only.end()) expected.insert(k);
  fmt::print("{} failed", failed.size());
  for (int k : failed) fmt::print(" {}", k);
  fmt::print("; known red");
  for (int k : expected) fmt::print(" {}", k);
  fmt::print("\n");
  return failed == expected ? 0 : 1;
}
