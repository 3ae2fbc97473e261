#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace kpz {

using cplx = std::complex<double>;

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// n-point Gauss-Legendre rule on [-1,1].
GaussRule gauss_legendre(int n);
// Shared immutable copy; thread safe.
const GaussRule& gauss_legendre_cached(int n);

enum class Mapping { linear_truncate, rational_map, exp_map };

struct QuadratureSpec {
  int nodes_per_axis = 64;
  double semiinf_cutoff = 40.0;
  Mapping mapping = Mapping::linear_truncate;

  void validate() const;
};

struct QuadResult {
  double value = 0;
  double err_est = 0;
};

enum class Side { left, right };

struct AxisDomain {
  enum class Kind { left_halfline, right_halfline, interval };
  Kind kind = Kind::interval;
  double a = 0, b = 1;

  static AxisDomain left() { return {Kind::left_halfline, 0, 0}; }
  static AxisDomain right() { return {Kind::right_halfline, 0, 0}; }
  static AxisDomain segment(double a, double b) { return {Kind::interval, a, b}; }
};

// Mapped nodes and weights for one axis.
struct AxisRule {
  std::vector<double> x;
  std::vector<double> w;
};

AxisRule interval_rule(double a, double b, int n);
AxisRule halfline_rule(Side side, int n, const QuadratureSpec& spec);
AxisRule axis_rule(const AxisDomain& d, int n, const QuadratureSpec& spec);
// Gauss-Legendre on equal panels of [a,b].
AxisRule composite_rule(double a, double b, int panels, int nodes);

using ScalarFn = std::function<double(double)>;
using VectorFn = std::function<double(std::span<const double>)>;

QuadResult integrate_halfline(const ScalarFn& f, Side side, const QuadratureSpec& spec);

QuadResult tensor_integrate(const VectorFn& f, const std::vector<AxisDomain>& domains,
                            const QuadratureSpec& spec);

struct QmcOptions {
  int shifts = 8;
  Mapping mapping = Mapping::exp_map;
  double scale = 1.0;  // length scale of the half-line map
};

// Randomly digitally shifted Sobol points; err_est is the standard error over shifts.
QuadResult qmc_integrate(const VectorFn& f, const std::vector<AxisDomain>& domains,
                         std::int64_t n_points, std::uint64_t seed, const QmcOptions& opt = {});

struct ContourSpec {
  double d1 = 1, d2 = 1, d3 = 2, d4 = 1;
  double tau1 = 0.5, tau2 = 0.4;
  double line_halflength = 12.0;
  int line_nodes = 241;
  int circle_nodes = 128;
  double endpoint_tol = 1e-13;

  void validate() const;
};

// (1/2 pi i) int over the upward line Re z = offset, trapezoid in t.
cplx line_contour_quad(const std::function<cplx(cplx)>& g, double offset, const ContourSpec& spec);

// (1/2 pi i) closed integral over |z| = radius, n-point periodic trapezoid.
cplx circle_contour_quad(const std::function<cplx(cplx)>& g, double radius, int n);

// Nodes z_k and weights c_k with (1/2 pi i) int g dz ~ sum c_k g(z_k).
struct ContourNodes {
  std::vector<cplx> z;
  std::vector<cplx> c;
};
ContourNodes line_nodes(double offset, double halflength, double step);
ContourNodes circle_nodes(double radius, int n);

}  // namespace kpz
