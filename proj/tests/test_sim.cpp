#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kpz/errors.hpp"
#include "kpz/sim.hpp"
#include "kpz/tw.hpp"
#include "oracles.hpp"

using namespace kpz;

namespace {

double ks_crit_1pct(std::size_t n) { return 1.63 / std::sqrt(static_cast<double>(n)); }

}  // namespace

TEST_CASE("counter RNG: deterministic, in range, roughly uniform and normal") {
  CounterRng a{42}, b{42}, c{43};
  CHECK(a.bits(1, 2, 3) == b.bits(1, 2, 3));
  CHECK(a.bits(1, 2, 3) != c.bits(1, 2, 3));
  CHECK(a.bits(1, 2, 3) != a.bits(1, 3, 2));
  std::vector<double> u, z;
  for (int i = 0; i < 50000; ++i) {
    const double v = a.uniform(0, i, 7);
    CHECK(v > 0);
    CHECK(v < 1);
    u.push_back(v);
    z.push_back(a.normal(5, i, 1));
  }
  CHECK(ks_one_sample(u, [](double x) { return std::clamp(x, 0.0, 1.0); }) < ks_crit_1pct(u.size()));
  CHECK(ks_one_sample(z, oracle::normal_cdf) < ks_crit_1pct(z.size()));
}

TEST_CASE("geometric LPP equals the maximum over all paths") {
  for (std::uint64_t rep = 0; rep < 300; ++rep) {
    GeomWeights w{0.45, 3, 3, 17, rep};
    std::vector<int> tab(9);
    for (int i = 1; i <= 3; ++i)
      for (int j = 1; j <= 3; ++j) tab[(i - 1) * 3 + j - 1] = w(i, j);
    for (int m = 1; m <= 3; ++m)
      for (int n = 1; n <= 3; ++n) CHECK(sample_geom_lpp(w, m, n) == oracle::lpp_paths(tab, 3, m, n));
  }
}

TEST_CASE("geometric LPP: single cell law and monotonicity") {
  const double q = 0.3;
  const int N = 100000, bins = 10;
  std::vector<int> count(bins + 1, 0);
  for (int r = 0; r < N; ++r) {
    GeomWeights w{q, 4, 4, 3, static_cast<std::uint64_t>(r)};
    ++count[std::min(static_cast<int>(sample_geom_lpp(w, 1, 1)), bins)];
    for (int m = 2; m <= 4; ++m) CHECK(sample_geom_lpp(w, m, 3) >= sample_geom_lpp(w, m - 1, 3));
  }
  double chi2 = 0;
  for (int k = 0; k <= bins; ++k) {
    const double p = k < bins ? (1 - q) * std::pow(q, k) : std::pow(q, bins);
    chi2 += std::pow(count[k] - N * p, 2) / (N * p);
  }
  CHECK(chi2 < 23.21);   // chi-square, 10 degrees of freedom, 1%
  CHECK_THROWS_AS(sample_geom_lpp(GeomWeights{q, 2, 2, 0, 0}, 3, 1), argument_error);
  CHECK_THROWS_AS(GeomWeights({1.0, 2, 2, 0, 0}).validate(), argument_error);
}

TEST_CASE("geometric LPP: law of large numbers on one column") {
  const double q = 0.4;
  const int m = 2000, N = 400;
  double s = 0;
  for (int r = 0; r < N; ++r) s += sample_geom_lpp(GeomWeights{q, m, 1, 9, static_cast<std::uint64_t>(r)}, m, 1);
  const double ratio = s / N * (1 - q) / q / m;
  const double se = std::sqrt(1 / (q * m * N));
  CHECK(std::abs(ratio - 1) < 4 * se);
}

TEST_CASE("Brownian field layout") {
  auto f = make_field(3, 2.0, 0.01, 1);
  CHECK(f.steps() == 200);
  CHECK(f.time(200) == doctest::Approx(2.0));
  CHECK(f.grid_index(1.0) == 100);
  CHECK_THROWS_AS(f.grid_index(1.005), argument_error);
  auto g = make_joint_field(3, 0.77, 2.0, 0.01, 1);
  CHECK(g.time(g.grid_index(0.77)) == doctest::Approx(0.77).epsilon(1e-12));
  CHECK(g.time(g.steps()) == doctest::Approx(2.0).epsilon(1e-12));
  for (int k = 0; k < g.steps(); ++k) CHECK(std::abs(g.step_length(k) - 0.01) < 0.002);
  BrownianField bad = f;
  bad.dt = 0;
  CHECK_THROWS_AS(bad.validate(), argument_error);
}

TEST_CASE("refinement splits coarse increments") {
  auto f = make_field(2, 1.0, 0.05, 8, 4);
  auto g = f;
  g.refine = 2;
  g.validate();
  REQUIRE(g.steps() == 4 * f.steps());
  for (int line = 1; line <= 2; ++line)
    for (int k = 0; k < f.steps(); ++k) {
      double s = 0;
      for (int j = 0; j < 4; ++j) s += g.increment(line, 4 * k + j);
      CHECK(std::abs(s - f.increment(line, k)) < 1e-12);
    }
}

TEST_CASE("field increments are N(0, dt)") {
  auto f = make_field(4, 10.0, 0.01, 5);
  std::vector<double> z;
  for (int line = 1; line <= 4; ++line)
    for (int k = 0; k < f.steps(); ++k) z.push_back(f.increment(line, k) / std::sqrt(f.step_length(k)));
  CHECK(ks_one_sample(z, oracle::normal_cdf) < ks_crit_1pct(z.size()));
}

TEST_CASE("one line is Brownian motion at time mu") {
  auto f = make_field(1, 1.0, 1e-3, 11);
  double s = 0;
  for (int k = 0; k < f.steps(); ++k) s += f.increment(1, k);
  for (auto sch : {BrownianScheme::grid, BrownianScheme::bridge}) CHECK(std::abs(sample_brownian_h(f, 1.0, 1, sch) - s) < 1e-12);

  const auto h = simulate_single(1.5, 1, 20000);
  CHECK(ks_one_sample(h, [](double x) { return oracle::normal_cdf(x / std::sqrt(1.5)); }) < ks_crit_1pct(h.size()));
  const double below = std::count_if(h.begin(), h.end(), [](double v) { return v <= 0; }) / double(h.size());
  CHECK(std::abs(below - 0.5) < 3 * std::sqrt(0.25 / h.size()));
}

TEST_CASE("two lines follow the 2x2 GUE law") {
  const auto h = simulate_single(1.0, 2, 20000);
  CHECK(ks_one_sample(h, [](double x) { return gue_finite_cdf(2, 1.0, x); }) < 0.02);
}

TEST_CASE("bridge scheme lies above the grid scheme pathwise") {
  for (std::uint64_t r = 0; r < 50; ++r) {
    auto f = make_field(5, 2.0, 0.01, 3, r);
    CHECK(sample_brownian_h(f, 2.0, 5, BrownianScheme::bridge) >= sample_brownian_h(f, 2.0, 5, BrownianScheme::grid));
  }
}

TEST_CASE("Brownian LPP against the exact GUE law at n = 8") {
  const auto h = simulate_single(3.0, 8, 4000);
  CHECK(ks_one_sample(h, [](double x) { return gue_finite_cdf(8, 3.0, x); }) < 0.03);
}

TEST_CASE("joint sampling: coupling along a fixed continuation") {
  const int n1 = 3, n2 = 6;
  const double mu1 = 1.0, mu2 = 2.5;
  for (std::uint64_t r = 0; r < 100; ++r) {
    auto f = make_joint_field(n2, mu1, mu2, 0.01, 21, r);
    const auto j = sample_joint(f, mu1, n1, mu2, n2);
    double cont = 0;
    for (int k = f.grid_index(mu1); k < f.grid_index(mu2); ++k) cont += f.increment(n1, k);
    CHECK(j.h2 >= j.h1 + cont - 1e-12);
    CHECK(j.h1 == doctest::Approx(sample_brownian_h(f, mu1, n1)).epsilon(1e-15));
  }
}

TEST_CASE("joint samples: marginal consistency and positive correlation") {
  const auto emb = make_embedding(10, 1, 2, 0, 0, 0, 0);
  SimConfig cfg;
  cfg.dt_fraction = 4e-3;
  const auto s = simulate_joint(emb, 10000, cfg);
  cfg.seed = 77;
  const auto single = simulate_single(emb.bp.mu1, emb.bp.n1, 10000, cfg);
  std::vector<double> h1, x, y;
  for (const auto& v : s) {
    h1.push_back(v.h1);
    x.push_back(v.x);
    y.push_back(v.y);
  }
  CHECK(ks_two_sample(h1, single) < 1.63 * std::sqrt(2.0 / 10000));
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / x.size(), my = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
  double cxy = 0, cxx = 0, cyy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    cxy += (x[i] - mx) * (y[i] - my);
    cxx += (x[i] - mx) * (x[i] - mx);
    cyy += (y[i] - my) * (y[i] - my);
  }
  CHECK(cxy / std::sqrt(cxx * cyy) > 0.2);
}

TEST_CASE("rescaling to the limit variables") {
  const auto emb = make_embedding(100, 1, 2, 0, 0, 0, 0);
  CHECK(std::abs(rescale_to_limit(2 * 100.0, 2 * 200.0, emb).first) < 1e-14);
  CHECK(std::abs(rescale_to_limit(2 * 100.0, 2 * 200.0, emb).second) < 1e-14);
  const double a = rescale_to_limit(210, 400, emb).first, b = rescale_to_limit(220, 400, emb).first;
  CHECK(std::abs((b - a) - 10 / std::cbrt(100.0)) < 1e-12);
  const auto e2 = make_embedding(100, 1, 2, 0.4, -0.3, 0.6, -0.2);
  for (double h1 : {e2.bp.xi1 - 1.0, e2.bp.xi1 + 1.0}) {
    const auto [X, Y] = rescale_to_limit(h1, e2.bp.xi2 + 0.5, e2);
    CHECK((X <= e2.eta1) == (h1 <= e2.bp.xi1));
    CHECK(Y > e2.eta2);
  }
}

TEST_CASE("seed determinism") {
  const auto emb = make_embedding(10, 1, 2, 0, 0, 0, 0);
  SimConfig c;
  c.dt_fraction = 1e-2;
  const auto a = simulate_joint(emb, 64, c), b = simulate_joint(emb, 64, c);
  c.threads = 1;
  const auto d = simulate_joint(emb, 64, c);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].h1 == b[i].h1);
    CHECK(a[i].h2 == b[i].h2);
    CHECK(a[i].h2 == d[i].h2);
  }
  c.seed = 2;
  const auto e = simulate_joint(emb, 64, c);
  CHECK(e[0].h2 != a[0].h2);
}

TEST_CASE("dt halving settles") {
  SimConfig c;
  const auto r = choose_dt_by_halving(1.0, 2, 10000, 0.01, c, 3);
  REQUIRE(!r.history.empty());
  CHECK(r.history.back().ks_to_next < 0.01);
  CHECK(r.refine <= 3);
}

TEST_CASE("empirical joint CDF") {
  std::vector<std::pair<double, double>> pts;
  CounterRng g{3};
  for (int i = 0; i < 2000; ++i) pts.emplace_back(g.normal(0, i, 0), g.normal(0, i, 1));
  const EmpiricalCdf2D E(pts);
  CHECK(E.size() == 2000);
  for (double a = -3; a <= 3; a += 0.5)
    for (double b = -3; b <= 3; b += 0.5) {
      const double v = E(a, b);
      CHECK(v >= 0);
      CHECK(v <= 1);
      CHECK(E(a + 0.5, b) >= v);
      CHECK(E(a, b + 0.5) >= v);
      CHECK(E.std_error(a, b) > 0);
    }
  CHECK(E(10, 10) == 1);
  CHECK(E(-10, 10) == 0);
  CHECK_THROWS(EmpiricalCdf2D{}(0, 0));
}

TEST_CASE("KS statistics on small samples") {
  CHECK(ecdf({3, 1, 2}, 2) == doctest::Approx(2.0 / 3));
  CHECK(ks_one_sample({0.5}, [](double x) { return x; }) == doctest::Approx(0.5));
  CHECK(ks_two_sample({1, 2, 3}, {1, 2, 3}) == 0);
  CHECK(ks_two_sample({1, 2}, {3, 4}) == doctest::Approx(1));
}

TEST_CASE("geometric to Brownian limit") {
  const auto rows = geom_to_brownian_check(0.3, {50, 200, 800}, 1.0, 2, 20000);
  REQUIRE(rows.size() == 3);
  CHECK(rows[1].ks_exact < rows[0].ks_exact);
  CHECK(rows[2].ks_exact < rows[1].ks_exact);
  CHECK(rows[2].ks_exact < 0.03);
  const auto q5 = geom_to_brownian_check(0.5, {800}, 1.0, 2, 20000);
  CHECK(std::abs(q5[0].ks_exact - rows[2].ks_exact) < 0.02);
  const auto n1 = geom_to_brownian_check(0.4, {800}, 2.0, 1, 20000);
  CHECK(n1[0].ks_exact < 0.03);
}

TEST_CASE("one line, many samples" * doctest::test_suite("slow")) {
  const auto h = simulate_single(1.0, 1, 100000);
  CHECK(ks_one_sample(h, oracle::normal_cdf) < ks_crit_1pct(h.size()));
}

TEST_CASE("two lines, many samples" * doctest::test_suite("slow")) {
  const auto h = simulate_single(1.0, 2, 100000);
  CHECK(ks_one_sample(h, [](double x) { return gue_finite_cdf(2, 1.0, x); }) < 0.02);
}
