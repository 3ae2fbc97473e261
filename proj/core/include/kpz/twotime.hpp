#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kpz/kernels.hpp"
#include "kpz/quad.hpp"

namespace kpz {

struct PointConfig {
  std::vector<double> x;   // each <= 0
  std::vector<double> xp;  // each <= 0
  std::vector<double> y;   // each >= 0
  std::vector<double> yp;  // each >= 0

  void validate() const;
};

struct TruncationSpec {
  int rmax = 2, smax = 2, tmax = 2;
  int shell_max = 2;           // largest r+s+t included
  double eta1_cutoff = 12.0;   // eta1 integral runs over [eta1*, max(eta1* + eta1_cutoff, 8)]
  double term_tol = 1e-10;     // stop after a shell whose terms are all below this

  void validate() const;
};

enum class SumKind { first, second };

struct FttConfig {
  KernelEvalConfig kernel{};
  int eta1_panels = 6;
  int eta1_nodes = 8;          // Gauss-Legendre nodes per eta1 panel
  double space_cutoff = 8.0;   // spatial half-lines truncated to length space_cutoff
  int space_panels = 4;
  int space_nodes = 8;         // per panel; the error estimate reruns with half as many
  std::int64_t qmc_points = 1 << 14;
  int qmc_shifts = 8;
  std::uint64_t seed = 0x5eed;
  double eta1_guard = 1e-8;    // integrand allowed at the upper eta1 limit

  void validate() const;
};

// Block determinants; kernels evaluated pointwise.
double w1_det(const TwoTimeParams& p, const PointConfig& c, const KernelEvalConfig& cfg = {});
double w2_det(const TwoTimeParams& p, const PointConfig& c, const KernelEvalConfig& cfg = {});

// Determinant by partial-pivot elimination of a row-major m x m matrix (destroyed).
double small_det(std::vector<double>& a, int m);

struct TermResult {
  int r = 0, s = 0, t = 0;
  SumKind kind = SumKind::first;
  double value = 0;    // includes factorial prefactor and the leading minus sign
  double err_est = 0;
  int dim = 0;         // spatial dimension
};

// Spatially integrated term at fixed eta1, without the eta1 integral.
TermResult ftt_term_density(const TwoTimeParams& p, int r, int s, int t, SumKind kind, const FttConfig& cfg = {});

TermResult ftt_term(const TwoTimeParams& p_base, int r, int s, int t, SumKind kind, double eta1_star,
                    const TruncationSpec& trunc = {}, const FttConfig& cfg = {});

// Density of the series in eta1: sum of the included term densities, sign flipped so
// that F_tt = F2(eta2) - int_{eta1*}^inf density.
struct DensityResult {
  double value = 0;
  double err_est = 0;
  std::vector<TermResult> terms;
};
DensityResult ftt_density(const TwoTimeParams& p, const TruncationSpec& trunc = {}, const FttConfig& cfg = {});

struct FttResult {
  double value = 0;
  double trunc_bound = 0;
  double f2 = 0;                   // F2(eta2)
  std::vector<TermResult> terms;
  std::vector<double> shell_abs;   // sum of |term| per shell
};

// p_base supplies t1, t2, nu1, nu2, eta2; its eta1 is ignored.
FttResult ftt(const TwoTimeParams& p_base, double eta1_star, const TruncationSpec& trunc = {},
              const FttConfig& cfg = {});

std::string term_name(const TermResult& t);

}  // namespace kpz
