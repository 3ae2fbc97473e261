#include <doctest.h>

#include <cmath>

#include "kpz/errors.hpp"
#include "kpz/prelimit.hpp"
#include "kpz/quad.hpp"
#include "kpz/tw.hpp"

using namespace kpz;

namespace {

// P[G(2,2) <= v] by summing over the four weights of the 2x2 box.
double g22_cdf(int v, double q) {
  double s = 0;
  for (int a = 0; a <= v; ++a)
    for (int b = 0; a + b <= v; ++b)
      for (int c = 0; a + c <= v; ++c)
        for (int d = 0; std::max(a + b, a + c) + d <= v; ++d) s += w_m(1, a, q) * w_m(1, b, q) * w_m(1, c, q) * w_m(1, d, q);
  return s;
}

}  // namespace

TEST_CASE("negative binomial weights") {
  const double q = 0.3;
  for (int x = 0; x < 10; ++x) CHECK(w_m(1, x, q) == doctest::Approx((1 - q) * std::pow(q, x)).epsilon(1e-14));
  CHECK(w_m(2, 1, q) == doctest::Approx(0.294).epsilon(1e-14));
  CHECK(w_m(3, -1, q) == 0);
  for (int m = 1; m <= 4; ++m) {
    double s = 0;
    for (int x = 0; x < 200; ++x) s += w_m(m, x, q);
    CHECK(std::abs(s - 1) < 1e-12);
  }
  CHECK_THROWS_AS(w_m(0, 1, q), argument_error);
}

TEST_CASE("finite differences of the weights") {
  const double q = 0.3;
  for (int x = 0; x < 8; ++x) CHECK(std::abs(delta_k_w_m(0, 2, x, q) - w_m(2, x, q)) < 1e-14);
  CHECK(std::abs(delta_k_w_m(1, 1, 0, q) + 0.49) < 1e-14);
  double partial = 0;
  for (int y = 0; y <= 2; ++y) partial += w_m(1, y, q);
  CHECK(std::abs(delta_k_w_m(-1, 1, 3, q) - partial) < 1e-12);
  for (int x = 0; x < 6; ++x) {
    const double d2 = w_m(3, x + 2, q) - 2 * w_m(3, x + 1, q) + w_m(3, x, q);
    CHECK(std::abs(delta_k_w_m(2, 3, x, q) - d2) < 1e-14);
  }
  // far in the tail the radius moves; compare against the exact difference
  const double big = w_m(2, 41, 0.6) - w_m(2, 40, 0.6);
  CHECK(std::abs(delta_k_w_m(1, 2, 40, 0.6) - big) < 1e-14);
}

TEST_CASE("vector probabilities") {
  const double q = 0.3;
  for (int x = 0; x < 6; ++x) CHECK(std::abs(vector_prob({x}, 3, 1, q) - w_m(3, x, q)) < 1e-14);
  double box = 0;
  for (int a = 0; a <= 6; ++a)
    for (int b = a; b <= 6; ++b) {
      const double p = vector_prob({a, b}, 2, 2, q);
      CHECK(p > -1e-12);
      box += p;
    }
  CHECK(std::abs(box - g22_cdf(6, q)) < 1e-6);
  CHECK_THROWS_AS(vector_prob({3, 1}, 2, 2, q), argument_error);
}

TEST_CASE("vector probabilities against enumeration") {
  for (int a = 0; a <= 3; ++a)
    for (int b = a; b <= 4; ++b) CHECK(std::abs(vector_prob({a, b}, 2, 2, 0.3) - vector_prob_enumerate({a, b}, 2, 2, 0.3)) < 1e-8);
}

TEST_CASE("transition probabilities") {
  const double q = 0.3;
  for (int a = 0; a <= 3; ++a)
    for (int b = a; b <= 4; ++b) CHECK(std::abs(transition_prob({0, 0}, {a, b}, 0, 2, 2, q) - vector_prob({a, b}, 2, 2, q)) < 1e-14);
  for (int x = 0; x <= 3; ++x)
    for (int y = x; y <= 6; ++y) CHECK(std::abs(transition_prob({x}, {y}, 1, 3, 1, q) - w_m(2, y - x, q)) < 1e-14);
  CHECK_THROWS_AS(transition_prob({0, 0}, {1, 1}, 2, 2, 2, q), argument_error);
}

TEST_CASE("Chapman-Kolmogorov at n = 2") {
  const double q = 0.3;
  for (int c = 0; c <= 4; ++c)
    for (int d = c; d <= 5; ++d) {
      double s = 0;
      for (int a = 0; a <= c; ++a)
        for (int b = a; b <= d; ++b) s += vector_prob({a, b}, 1, 2, q) * transition_prob({a, b}, {c, d}, 1, 2, 2, q);
      CHECK(std::abs(s - vector_prob({c, d}, 2, 2, q)) < 1e-8);
    }
}

TEST_CASE("joint CDF: contour formula against enumeration") {
  const GeomLppParams p{0.3, 1, 2, 1, 2};
  for (int v1 = 0; v1 <= 4; ++v1)
    for (int v2 = 0; v2 <= 4; ++v2) CHECK(std::abs(joint_cdf_contour(p, v1, v2) - joint_cdf_enumerate(p, v1, v2)) < 1e-8);
}

TEST_CASE("joint CDF is a distribution function") {
  const GeomLppParams p{0.3, 1, 2, 1, 2};
  for (int v1 = 0; v1 <= 6; ++v1)
    for (int v2 = 0; v2 <= 6; ++v2) {
      const double f = joint_cdf_contour(p, v1, v2);
      CHECK(f > -1e-9);
      CHECK(f < 1 + 1e-9);
      if (v1 > 0) CHECK(f >= joint_cdf_contour(p, v1 - 1, v2) - 1e-12);
      if (v2 > 0) CHECK(f >= joint_cdf_contour(p, v1, v2 - 1) - 1e-12);
    }
  // G(1,1) <= G(2,2), so a large v1 leaves the single-point law
  for (int v2 = 0; v2 <= 5; ++v2) CHECK(std::abs(joint_cdf_contour(p, 60, v2) - g22_cdf(v2, 0.3)) < 1e-10);
}

TEST_CASE("joint CDF does not depend on admissible radii") {
  const GeomLppParams p{0.3, 1, 2, 1, 2};
  JointContourConfig a, b;
  a.s1 = 0.4;
  a.r1 = 0.6;
  a.r2 = 0.5;
  a.s2 = 0.6;
  b.s1 = 0.2;
  b.r1 = 0.5;
  b.r2 = 0.3;
  b.s2 = 0.4;
  for (int v : {1, 3}) {
    const double ref = joint_cdf_contour(p, v, v + 1);
    CHECK(std::abs(joint_cdf_contour(p, v, v + 1, a) - ref) < 1e-9);
    CHECK(std::abs(joint_cdf_contour(p, v, v + 1, b) - ref) < 1e-9);
  }
  JointContourConfig bad = a;
  bad.s1 = 0.5;   // (0.6/0.5) < (0.6/0.5)
  CHECK_THROWS_AS(joint_cdf_contour(p, 1, 1, bad), argument_error);
  // ratio 0.97 needs more series terms than the circle rule resolves
  JointContourConfig close{0.4, 0.6, 0.55, 0.8};
  CHECK_THROWS_AS(joint_cdf_contour(p, 1, 1, close), argument_error);
  CHECK_THROWS_AS(joint_cdf_contour({0.3, 1, 2, 1, 4}, 1, 1), unsupported_error);
}

TEST_CASE("joint CDF at n2 = 3") {
  const GeomLppParams p{0.4, 1, 3, 2, 3};
  for (int v1 = 0; v1 <= 3; ++v1)
    for (int v2 = v1; v2 <= 4; ++v2) CHECK(std::abs(joint_cdf_contour(p, v1, v2) - joint_cdf_enumerate(p, v1, v2)) < 1e-8);
}

TEST_CASE("scaling embedding") {
  const auto e = make_embedding(100, 1, 2, 0.3, -0.2, 0.5, -0.4);
  CHECK(e.N1 == doctest::Approx(100));
  CHECK(e.N2 == doctest::Approx(100));
  CHECK(e.bp.n1 == std::lround(100 + 0.3 * std::pow(100.0, 2.0 / 3)));
  const double dxi = e.bp.xi2 - e.bp.xi1;
  CHECK(std::abs(dxi - (2 * e.N2 + e.limit.dlambda * std::cbrt(e.N2))) < 1e-10);
  for (double x : {-1.0, 0.0, 0.7}) CHECK(std::abs(e.x_of(e.ell_of(x)) - x) <= 0.5 / e.scale() + 1e-12);
  for (int k : {e.bp.n1 - 3, e.bp.n1, e.bp.n1 + 5}) CHECK(e.k_of(e.y_of(k)) == k);
  CHECK_THROWS_AS(make_embedding(0.5, 1, 2, 0, 0, 0, 0), argument_error);
  CHECK_THROWS_AS(make_embedding(-1, 1, 2, 0, 0, 0, 0), argument_error);
}

TEST_CASE("finite kernels: smoke and composite algebra") {
  const BrownianLppParams bp{1, 3, 1.0, 2.5, 0.4, 1.2};
  CHECK(std::isfinite(finite_kernel(FiniteKernel::c3, bp, 1, 1)));
  CHECK(std::isfinite(finite_kernel(FiniteKernel::a01, bp, 1, 3)));
  CHECK_THROWS_AS(finite_kernel(FiniteKernel::c2, bp, 0, 1), argument_error);
  for (int ell = 1; ell <= 3; ++ell) {
    const auto at_n1 = composite_kernels(bp, ell, bp.n1);
    const double ind = ell <= bp.n1 ? 1 : 0;
    CHECK(std::abs(at_n1.a0 - (at_n1.a01 - ind * at_n1.c3)) < 1e-14);
    CHECK(std::abs(at_n1.a0_tilde - (at_n1.a01 + at_n1.c2 - ind * at_n1.c3)) < 1e-14);
  }
  const auto kt = kernel_tables(bp);
  for (int ell = 1; ell <= 3; ++ell)
    for (int k = 1; k <= 3; ++k) {
      const auto c = composite_kernels(bp, ell, k);
      CHECK(std::abs(kt.a0(ell, k) - c.a0) < 1e-12);
      CHECK(std::abs(kt.b(ell, k) - c.b) < 1e-12);
    }
}

TEST_CASE("Q'(0): three evaluation routes") {
  for (const auto& bp : {BrownianLppParams{1, 2, 1.0, 2.0, 0.3, 1.1}, BrownianLppParams{1, 3, 0.8, 2.0, 0.5, 1.9},
                         BrownianLppParams{2, 4, 1.5, 3.0, 1.2, 2.5}}) {
    const auto kt = kernel_tables(bp);
    const double six = q_prime_expansion(kt).total;
    CHECK(std::abs(six - q_prime_permutation(kt)) < 1e-8 * std::abs(six));
    CHECK(std::abs(six - q_prime_direct(bp)) < 1e-8 * std::abs(six));
    CHECK(std::abs(q_block_sum(kt, 0) - q_permutation_sum(kt, 0)) < 1e-10);
  }
  CHECK_THROWS_AS(q_prime_expansion(BrownianLppParams{3, 4, 1, 2, 0, 0}), unsupported_error);
}

TEST_CASE("Q'(0) is a density in xi1 whose integral is the second marginal") {
  for (double xi2 : {0.0, 1.0, 2.5}) {
    const auto r = composite_rule(-8, 10, 12, 8);
    double s = 0;
    for (std::size_t i = 0; i < r.x.size(); ++i) {
      const double d = q_prime_expansion(BrownianLppParams{1, 2, 1.0, 2.0, r.x[i], xi2}).total;
      CHECK(d > -1e-9);
      s += r.w[i] * d;
    }
    CHECK(std::abs(s - gue_finite_cdf(2, 2.0, xi2)) < 1e-8);
  }
}

TEST_CASE("rescaled finite kernels approach their limits") {
  for (auto k : {FiniteKernel::a01, FiniteKernel::c2, FiniteKernel::c3}) {
    double prev = INFINITY;
    for (double M : {50.0, 100.0, 200.0, 400.0}) {
      const double e = rescaled_kernel_error(M, k, 0, 0);
      CHECK(std::isfinite(e));
      CHECK(e < prev);
      prev = e;
    }
  }
  CHECK(rescaled_kernel_error(400, FiniteKernel::c2, 0, 0) < 0.05);
  CHECK(rescaled_kernel_error(400, FiniteKernel::c3, 0, 0) < 0.05);
  CHECK(rescaled_kernel_error(400, FiniteKernel::a01, 0, 0) < 0.1);
  for (double M : {50.0, 400.0}) CHECK(rescaled_kernel_error(M, FiniteKernel::b1, 0, 0) < 1e-3);
  CHECK_THROWS_AS(rescaled_kernel_error(5, FiniteKernel::c2, 0, 0), argument_error);
}
