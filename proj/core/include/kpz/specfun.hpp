#pragma once

namespace kpz {

struct EvalPrecision {
  double abs_tol = 1e-14;
  double rel_tol = 1e-12;
  int max_refine = 4;

  void validate() const;
};

// Ai and Ai' for real arguments.
double airy_ai(double x);
double airy_ai_prime(double x);

// Both at once; cheaper than two separate calls.
void airy_ai_pair(double x, double& ai, double& aip);

// K_Ai(x,y) = int_0^inf Ai(x+t) Ai(y+t) dt via the two-point closed form.
double airy_kernel(double x, double y);

// Same kernel from the defining integral, with t = u/(1-u) and Gauss-Legendre
// panels in u. Slow; kept as an independent check of airy_kernel.
double airy_kernel_quadrature(double x, double y, int panels = 48, int nodes = 24);

namespace detail {
// Raw evaluators, exposed for tests of the individual branches.
void airy_maclaurin(double x, double& ai, double& aip);
void airy_asymptotic_right(double x, double& ai, double& aip);
void airy_asymptotic_left(double x, double& ai, double& aip);
}  // namespace detail

}  // namespace kpz
