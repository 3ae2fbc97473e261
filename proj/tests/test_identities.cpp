#include <doctest.h>

#include <cmath>

#include "kpz/errors.hpp"
#include "kpz/identities.hpp"
#include "kpz/specfun.hpp"

using namespace kpz;

TEST_CASE("relative error helper") {
  CHECK(rel_err(1.0, 1.0) == 0);
  CHECK(rel_err(2.0, 1.0) == doctest::Approx(0.5));
  CHECK(rel_err(0.0, 0.0) == 0);
}

TEST_CASE("single-variable symmetrization is exact") {
  const cplx w(0.3, 0.4);
  const auto r = check_tw_symmetrization({w});
  CHECK(r.max_rel_err < 1e-15);
  CHECK(r.pass);
  const auto d = check_double_symmetrization({cplx(0.1, 0.2)}, {cplx(-0.5, 0.6)});
  CHECK(d.max_rel_err < 1e-15);
}

TEST_CASE("symmetrization identities on random points") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto w3 = sample_annulus(seed, 3, 0.2, 0.8);
    CHECK(check_tw_symmetrization(w3).max_rel_err < 1e-11);
    const auto w4 = sample_annulus(seed + 100, 4, 0.2, 0.8);
    CHECK(check_tw_symmetrization(w4).pass);
    const auto z = sample_annulus(seed, 2, 0.05, 0.4), w = sample_annulus(seed + 7, 2, 0.4, 0.9);
    CHECK(check_double_symmetrization(z, w).max_rel_err < 1e-10);
  }
  const auto z3 = sample_annulus(3, 3, 0.05, 0.4), w3 = sample_annulus(4, 3, 0.4, 0.9);
  CHECK(check_double_symmetrization(z3, w3).max_rel_err < 1e-9);
}

TEST_CASE("annulus sampler") {
  const auto u = sample_annulus(9, 50, 0.3, 0.6);
  CHECK(u.size() == 50);
  for (auto v : u) {
    CHECK(std::abs(v) > 0.3);
    CHECK(std::abs(v) < 0.6);
  }
  CHECK(sample_annulus(9, 50, 0.3, 0.6) == u);
}

TEST_CASE("residue identities") {
  const auto r1 = check_residue_identity({cplx(0.1, 0.05)}, {cplx(-0.3, 0.2)});
  CHECK(r1.pass);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto z = sample_annulus(seed, 2, 0.05, 0.3), w = sample_annulus(seed + 50, 2, 0.05, 0.6);
    const auto r = check_residue_identity(z, w);
    CHECK(r.max_rel_err < 1e-9);
  }
  CHECK_THROWS_AS(check_residue_identity({cplx(0.1)}, {cplx(0.2), cplx(0.3)}), argument_error);
}

TEST_CASE("Airy contour identity") {
  const auto a = check_airy_contour(0, 0, AiryContourSide::raising, 1);
  CHECK(a.pass);
  const auto b = check_airy_contour(1, -1, AiryContourSide::raising, 1);
  CHECK(b.max_rel_err < 1e-9);
  double v[3];
  int i = 0;
  for (double D : {0.5, 1.0, 2.0}) v[i++] = airy_gaussian_contour_both(0.7, -0.4, AiryContourSide::lowering, D).numeric;
  CHECK(std::abs(v[0] - v[1]) < 1e-10);
  CHECK(std::abs(v[1] - v[2]) < 1e-10);
  CHECK_THROWS_AS(check_airy_contour(0, 0, AiryContourSide::raising, -1), domain_error);
}

TEST_CASE("singular configurations ask for a redraw") {
  CHECK_THROWS_AS(check_tw_symmetrization({cplx(0.5, 0), cplx(2.0, 0)}), singular_configuration);
}

TEST_CASE("full identity suite") {
  const auto reps = run_identity_suite();
  CHECK(!reps.empty());
  for (const auto& r : reps) {
    INFO(r.name, " n=", r.n, " err=", r.max_rel_err);
    CHECK(r.pass == (r.max_rel_err < r.threshold));
    CHECK(r.pass);
    CHECK(r.points_tested >= 1);
  }
}
