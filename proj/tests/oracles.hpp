#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

// Ai, Ai' from the Maclaurin series, 30 terms, long double.
void airy_series(double x, double& ai, double& aip);

// Largest eigenvalue of an n x n GUE with entry variance mu, through the
// Dumitriu-Edelman tridiagonal model and Sturm-count bisection.
double gue_lambda_max(int n, double mu, std::mt19937_64& rng);

// max over all up/right paths in a rows x cols weight table (row-major), by enumeration.
long long lpp_paths(const std::vector<int>& w, int cols, int m, int n);

double normal_cdf(double x);

}  // namespace oracle
