#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kpz/errors.hpp"
#include "kpz/kernels.hpp"
#include "kpz/quad.hpp"

namespace kpz {

// Thrown when a random configuration lands too close to a singular set; draw again.
struct singular_configuration : argument_error {
  using argument_error::argument_error;
};

struct IdentityReport {
  std::string name;
  int n = 0;
  int points_tested = 0;
  double max_rel_err = 0;
  double threshold = 0;
  bool pass = false;
};

// |lhs - rhs| / max(|lhs|, |rhs|, 1e-300)
double rel_err(cplx lhs, cplx rhs);

// Permutation sum with partial products of w against the Vandermonde form.
IdentityReport check_tw_symmetrization(const std::vector<cplx>& w, double threshold = 1e-10);
// Double permutation sum against the Cauchy determinant form.
IdentityReport check_double_symmetrization(const std::vector<cplx>& z, const std::vector<cplx>& w,
                                           double threshold = 1e-10);

struct ResidueCheckConfig {
  double r1 = 0, r2 = 0;   // 0 picks radii just outside the points
  int nodes = 256;
};

// The k,l double sum against its product form, and the double circle integral
// against (-1)^n prod (1-z_j)/(1-w_j); max_rel_err covers both.
IdentityReport check_residue_identity(const std::vector<cplx>& z, const std::vector<cplx>& w,
                                      double threshold = 1e-9, const ResidueCheckConfig& cfg = {});

IdentityReport check_airy_contour(double A, double B, AiryContourSide side, double D, double threshold = 1e-9);

// Uniform points in the annulus rmin < |u| < rmax.
std::vector<cplx> sample_annulus(std::uint64_t seed, int n, double rmin, double rmax);

struct IdentitySuiteConfig {
  std::uint64_t seed = 20240917;
  int draws = 100;
};

// Seeded random draws of every identity at the sizes used for acceptance; one report per (identity, n).
std::vector<IdentityReport> run_identity_suite(const IdentitySuiteConfig& cfg = {});

}  // namespace kpz
