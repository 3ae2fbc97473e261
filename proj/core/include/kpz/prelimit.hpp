#pragma once

#include <array>
#include <vector>

#include "kpz/kernels.hpp"
#include "kpz/quad.hpp"

namespace kpz {

// ---- geometric last-passage percolation ----

struct GeomLppParams {
  double q = 0.3;
  int m1 = 1, m2 = 2, n1 = 1, n2 = 2;

  void validate() const;
};

// (1-q)^m C(x+m-1, x) q^x on x >= 0.
double w_m(int m, int x, double q);

struct DeltaConfig {
  double radius = 0.5;
  int min_nodes = 128;
  int large_index = 24;   // above this x+k the radius moves towards the saddle
};

// Delta^k w_m(x) from the circle integral; k < 0 gives iterated partial sums.
double delta_k_w_m(int k, int m, int x, double q, const DeltaConfig& cfg = {});

// P[G(m) = x] for x weakly increasing of length n.
double vector_prob(const std::vector<int>& x, int m, int n, double q, const DeltaConfig& cfg = {});
// P[G(m) = y | G(ell) = x].
double transition_prob(const std::vector<int>& x, const std::vector<int>& y, int ell, int m, int n, double q,
                       const DeltaConfig& cfg = {});

struct JointContourConfig {
  // All four radii zero means pick them automatically.
  double s1 = 0, r1 = 0, r2 = 0, s2 = 0;
  int circle_nodes = 96;
  double series_tol = 1e-16;   // stop the geometric series once ratio^k drops below
  int max_series = 2000;
};

struct JointContourResult {
  double value = 0;
  double imag = 0;
  int series_terms = 0;
  std::array<double, 4> radii{};  // s1, r1, r2, s2
};

// P[G(m1,n1) <= v1, G(m2,n2) <= v2], n2 <= 3.
JointContourResult joint_cdf_contour_full(const GeomLppParams& p, int v1, int v2, const JointContourConfig& cfg = {});
double joint_cdf_contour(const GeomLppParams& p, int v1, int v2, const JointContourConfig& cfg = {});

// Exhaustive enumeration over the weights of the rows x cols box, each capped at
// the largest value the event allows. Small boxes only (at most 1e8 configurations).
double joint_cdf_enumerate(const GeomLppParams& p, int v1, int v2);
double vector_prob_enumerate(const std::vector<int>& x, int m, int n, double q);
double transition_prob_enumerate(const std::vector<int>& x, const std::vector<int>& y, int ell, int m, int n, double q);

// ---- Brownian finite-n formulas ----

struct BrownianLppParams {
  int n1 = 1, n2 = 2;
  double mu1 = 1, mu2 = 2, xi1 = 0, xi2 = 0;

  int dn() const { return n2 - n1; }
  double dmu() const { return mu2 - mu1; }
  double dxi() const { return xi2 - xi1; }
  void validate() const;
};

struct ScalingEmbedding {
  double M = 100;
  double t1 = 1, t2 = 2, nu1 = 0, nu2 = 0, eta1 = 0, eta2 = 0;

  double N1 = 0, N2 = 0;          // t1 M, (t2 - t1) M
  double n1_real = 0, n2_real = 0;
  BrownianLppParams bp;           // n's rounded, mu's and xi's exact
  TwoTimeParams limit;            // parameters of the limiting kernels

  int ell_of(double x) const;     // nearest integer to n1 + 1 + x N1^(1/3)
  int k_of(double y) const;       // nearest integer to n1 + y N1^(1/3)
  double x_of(int ell) const;
  double y_of(int k) const;
  double scale() const;           // N1^(1/3)
};

ScalingEmbedding make_embedding(double M, double t1, double t2, double nu1, double nu2, double eta1, double eta2);

enum class FiniteKernel { a01, b1, c2, c3 };

struct FiniteKernelConfig {
  // Fixed geometry for small n: lines Re z = D1 < D2 (a01, b1) or D (c2, c3),
  // circles of radius tau1, tau2 (a01, b1) or tau (c2, c3).
  double D1 = 1.5, D2 = 2.5, D = 1.5;
  double tau1 = 0.6, tau2 = 0.5, tau = 0.6;
  int circle_nodes = 128;
  double line_decay = 40.0;       // lines truncated where the integrand is e^-line_decay below its peak

  // Scaled geometry: z = 1 + (d + it) N^(-1/3), zeta = (1 - d N^(-1/3)) e^(is N^(-1/3)).
  ContourSpec offsets{};          // d1..d4, used when auto_offsets is false
  bool auto_offsets = true;
  double scaled_step = 0.2;       // trapezoid step in t and s

  void validate() const;
};

// Small-n contour integral on the fixed geometry.
double finite_kernel(FiniteKernel kind, const BrownianLppParams& bp, int ell, int k, const FiniteKernelConfig& cfg = {});
// Contours placed on the scaling window of the embedding.
double finite_kernel(FiniteKernel kind, const ScalingEmbedding& emb, int ell, int k, const FiniteKernelConfig& cfg = {});

struct CompositeKernels {
  double a0 = 0, b = 0, a0_tilde = 0, a2s = 0, a3s = 0;
  double a01 = 0, b1 = 0, c2 = 0, c3 = 0;
};

CompositeKernels composite_kernels(const BrownianLppParams& bp, int ell, int k, const FiniteKernelConfig& cfg = {});
CompositeKernels composite_kernels(const ScalingEmbedding& emb, int ell, int k, const FiniteKernelConfig& cfg = {});

// All kernels on [1,n2]^2, 1-based access.
struct KernelTables {
  int n1 = 0, n2 = 0;
  std::vector<double> a01, b1, c2, c3;   // (n2+1)^2, row ell, column k

  double at(const std::vector<double>& t, int ell, int k) const { return t[ell * (n2 + 1) + k]; }
  double a0(int ell, int k) const;
  double b(int ell, int k) const;
  double a2s(int ell) const;
  double a3s(int k) const;
  double a0_tilde(int ell) const;
  double A0s(int ell, int k) const;
  double A(int ell, int k, double h) const;
  double B(int ell, int k) const;
};

KernelTables kernel_tables(const BrownianLppParams& bp, const FiniteKernelConfig& cfg = {});

struct QPrimeParts {
  std::array<double, 6> part{};
  double total = 0;
};

// The six index sums; n1 <= 2 and n2 - n1 <= 2.
QPrimeParts q_prime_expansion(const KernelTables& kt);
QPrimeParts q_prime_expansion(const BrownianLppParams& bp, const FiniteKernelConfig& cfg = {});

// Q(h) from the block-determinant sum and from the permutation product form.
double q_block_sum(const KernelTables& kt, double h);
double q_permutation_sum(const KernelTables& kt, double h);
// h-derivative at 0 of the permutation product form.
double q_prime_permutation(const KernelTables& kt);

struct DirectLineConfig {
  double d1 = -1.0, d3 = -0.5;   // z and w lines for the first n1 pairs
  double d2 = -0.5, d4 = -1.0;   // and for the remaining ones
  double decay = 40.0;
};

// Q(h) and Q'(0) straight from the line integrals over z and w (no zeta, omega).
double q_direct(const BrownianLppParams& bp, double h, const DirectLineConfig& cfg = {});
double q_prime_direct(const BrownianLppParams& bp, const DirectLineConfig& cfg = {});

// |N1^(1/3) finite kernel - limit kernel| at the embedded indices.
double rescaled_kernel_error(const ScalingEmbedding& emb, FiniteKernel which, double x, double y,
                             const FiniteKernelConfig& cfg = {});
double rescaled_kernel_error(double M, FiniteKernel which, double x, double y);

}  // namespace kpz
