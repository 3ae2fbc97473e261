#pragma once

#include <vector>

#include "kpz/quad.hpp"

namespace kpz {

struct TwoTimeParams {
  double t1 = 1, t2 = 2, nu1 = 0, nu2 = 0, eta1 = 0, eta2 = 0;
  double dt = 1;       // t2 - t1
  double alpha = 1;    // (t1/dt)^(1/3)
  double dnu = 0;      // nu2 (t2/dt)^(2/3) - nu1 (t1/dt)^(2/3)
  double lambda1 = 0;  // eta1 - nu1^2
  double lambda2 = 0;  // eta2 - nu2^2
  double dlambda = 0;  // lambda2 (t2/dt)^(1/3) - lambda1 (t1/dt)^(1/3)
  double deta = 0;     // dlambda + dnu^2
};

TwoTimeParams derive_params(double t1, double t2, double nu1, double nu2, double eta1, double eta2);
// Same parameters with eta1 replaced; the other inputs are kept.
TwoTimeParams with_eta1(const TwoTimeParams& p, double eta1);
// Delta eta written out directly from the eta's, independent of derive_params.
double deta_direct(double t1, double t2, double nu1, double nu2, double eta1, double eta2);

struct KernelEvalConfig {
  QuadratureSpec tau_quad{16, 40.0, Mapping::linear_truncate};  // nodes per unit panel, cutoff
  double tau_guard = 1e-14;     // integrand magnitude allowed at the cutoff
  ContourSpec contour{};        // offsets used when auto_offsets is false
  bool auto_offsets = true;     // pick admissible offsets from the parameters
  double contour_step = 0.2;    // trapezoid step along lines
};

double phi1(const TwoTimeParams& p, double x, double y, const KernelEvalConfig& cfg = {});
double psi1(const TwoTimeParams& p, double x, double y, const KernelEvalConfig& cfg = {});
double phi2(const TwoTimeParams& p, double x, double y);
double phi3(const TwoTimeParams& p, double x, double y);
double phi(const TwoTimeParams& p, double x, double y, const KernelEvalConfig& cfg = {});
double psi(const TwoTimeParams& p, double x, double y, const KernelEvalConfig& cfg = {});

enum class ContourKernel { phi1, psi1, phi2, phi3 };

// Offsets satisfying the ordering rule of the given kernel with unit margins.
ContourSpec admissible_contour(const TwoTimeParams& p, ContourKernel which, const ContourSpec& base = {});
void check_contour(const TwoTimeParams& p, ContourKernel which, const ContourSpec& c);

struct ContourValue {
  double re = 0;
  double im = 0;
};

ContourValue kernel_contour_raw(ContourKernel which, const TwoTimeParams& p, double x, double y,
                                const KernelEvalConfig& cfg = {});
double phi1_contour(const TwoTimeParams& p, double x, double y, const KernelEvalConfig& cfg = {});
double psi1_contour(const TwoTimeParams& p, double x, double y, const KernelEvalConfig& cfg = {});
double phi2_contour(const TwoTimeParams& p, double x, double y, const KernelEvalConfig& cfg = {});
double phi3_contour(const TwoTimeParams& p, double x, double y, const KernelEvalConfig& cfg = {});

enum class AiryContourSide { raising, lowering };

struct AiryContourPair {
  double numeric = 0;
  double numeric_imag = 0;
  double closed = 0;
};

// (1/2 pi i) int exp(+-z^3/3 + A z^2 + B z) dz through +-D, both ways. The
// numeric path leaves the point +-D along the steepest-descent rays, which is
// the same integral as the vertical line whenever that one converges.
AiryContourPair airy_gaussian_contour_both(double A, double B, AiryContourSide side, double D);
double airy_gaussian_contour(double A, double B, AiryContourSide side, double D);

// Kernel matrices on a point set at fixed parameters, with the tau integrals
// of phi1/psi1 shared across all point pairs.
struct KernelMatrices {
  std::vector<double> pts;
  std::vector<double> phi;  // row-major, phi[i*n+j] = phi(pts[i], pts[j])
  std::vector<double> psi;
  double at_phi(std::size_t i, std::size_t j) const { return phi[i * pts.size() + j]; }
  double at_psi(std::size_t i, std::size_t j) const { return psi[i * pts.size() + j]; }
};

KernelMatrices kernel_matrices(const TwoTimeParams& p, const std::vector<double>& pts,
                               const KernelEvalConfig& cfg = {});

}  // namespace kpz
