#pragma once

namespace kpz {

struct FredholmSpec {
  int nystrom_nodes = 60;
  double domain_cutoff = 16.0;

  void validate() const;
};

// F2(eta) = det(I - K_Ai) on L^2(eta, inf), Nystrom with symmetric weights.
double f2_cdf(double eta, const FredholmSpec& spec = {});

// P[lambda_max <= xi] for an n x n GUE with density ~ exp(-x^2 / (2 mu)).
// n <= 8 uses the moment Hankel determinant, larger n the Hermite Gram form.
double gue_finite_cdf(int n, double mu, double xi);

// Hermite-function Gram determinant det(int_{-inf}^{xi} psi_i psi_j), any n >= 1.
double gue_finite_cdf_gram(int n, double mu, double xi);

}  // namespace kpz
