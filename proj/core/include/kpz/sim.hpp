#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "kpz/prelimit.hpp"

namespace kpz {

// ---- counter-based randomness ----

// Stateless generator: every draw is a hash of (seed, stream, a, b, c).
struct CounterRng {
  std::uint64_t seed = 0;

  std::uint64_t bits(std::uint64_t stream, std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) const;
  double uniform(std::uint64_t stream, std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) const;   // (0,1)
  double normal(std::uint64_t stream, std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) const;
};

// ---- geometric LPP ----

struct GeomWeights {
  double q = 0.3;
  int rows = 1, cols = 1;
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;

  void validate() const;
  int operator()(int i, int j) const;   // 1-based
};

long long sample_geom_lpp(const GeomWeights& w, int m, int n);

// ---- Brownian LPP ----

enum class BrownianScheme {
  grid,     // sup over grid times only
  bridge,   // each cell's sup drawn from the Brownian-bridge maximum law
};

// Increments of n_lines Brownian motions on a piecewise uniform time grid.
// Segments end at the knots; refine > 0 halves every step that many times,
// splitting the coarse increments by Levy's construction so runs at different
// refine levels share their coarse path.
struct BrownianField {
  int n_lines = 1;
  double t_max = 1;
  double dt = 1e-3;                 // nominal step before refinement
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
  int refine = 0;
  std::vector<double> knots;        // interior segment ends, increasing, in (0, t_max)

  void validate() const;

  int steps() const;                          // fine steps
  double step_length(int k) const;            // fine step k, 0-based
  double time(int k) const;                   // time after k fine steps
  int grid_index(double mu) const;            // argument_error when mu is off the grid
  double increment(int line, int k) const;    // line 1-based
  double bridge_uniform(int line, int k) const;

  // Coarse layout, computed by validate().
  struct Segment {
    double t0, len;
    int steps;
  };
  std::vector<Segment> segments() const;
};

// Uniform grid covering [0, t_max].
BrownianField make_field(int n_lines, double t_max, double dt, std::uint64_t seed, std::uint64_t replica = 0);
// Grid with mu1 and mu2 both on it; steps close to dt.
BrownianField make_joint_field(int n_lines, double mu1, double mu2, double dt, std::uint64_t seed,
                               std::uint64_t replica = 0);

double sample_brownian_h(const BrownianField& f, double mu, int n, BrownianScheme scheme = BrownianScheme::bridge);

struct JointH {
  double h1 = 0, h2 = 0;
};

// (H(mu1,n1), H(mu2,n2)) from one DP pass over the same field.
JointH sample_joint(const BrownianField& f, double mu1, int n1, double mu2, int n2,
                    BrownianScheme scheme = BrownianScheme::bridge);
JointH sample_joint(const BrownianField& f, const ScalingEmbedding& emb,
                    BrownianScheme scheme = BrownianScheme::bridge);

std::pair<double, double> rescale_to_limit(double h1, double h2, const ScalingEmbedding& emb);

// ---- batch simulation ----

struct SimConfig {
  std::uint64_t seed = 1;
  double dt_fraction = 1e-3;   // dt = dt_fraction * mu2
  int refine = 0;
  BrownianScheme scheme = BrownianScheme::bridge;
  int threads = 0;
};

struct JointSample {
  double h1 = 0, h2 = 0, x = 0, y = 0;
};

// Sample i uses field replica i.
std::vector<JointSample> simulate_joint(const ScalingEmbedding& emb, int samples, const SimConfig& cfg = {});
std::vector<double> simulate_single(double mu, int n, int samples, const SimConfig& cfg = {});

struct HalvingStep {
  int refine = 0;
  double dt = 0;
  double ks_to_next = 0;   // KS between this level and the next finer one
};

struct HalvingResult {
  double dt = 0;
  int refine = 0;
  std::vector<HalvingStep> history;
  std::vector<double> samples;   // H at the accepted level
};

// Halve dt until two consecutive levels differ by less than tol in KS distance.
HalvingResult choose_dt_by_halving(double mu, int n, int samples, double tol, const SimConfig& cfg = {},
                                   int max_refine = 4);

// ---- statistics ----

class EmpiricalCdf2D {
 public:
  EmpiricalCdf2D() = default;
  explicit EmpiricalCdf2D(std::vector<std::pair<double, double>> pts);

  std::size_t size() const { return xs_.size(); }
  double operator()(double a, double b) const;   // fraction with x <= a and y <= b
  double std_error(double a, double b) const;

 private:
  std::vector<double> xs_, ys_;   // sorted by x
};

double ecdf(std::vector<double> sorted_or_not, double a);
double ks_one_sample(std::vector<double> xs, const std::function<double(double)>& cdf);
double ks_two_sample(std::vector<double> a, std::vector<double> b);

struct GeomBrownianRow {
  double T = 0;
  int m = 0;
  double ks_mc = 0;      // against the Brownian DP sample
  double ks_exact = 0;   // against the finite GUE law
};

// Rescaled G([mu T], n) against H(mu, n), one row per T.
std::vector<GeomBrownianRow> geom_to_brownian_check(double q, const std::vector<double>& Ts, double mu, int n,
                                                    int samples, std::uint64_t seed = 7, int threads = 0);

}  // namespace kpz
