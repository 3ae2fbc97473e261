#include "kpz/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "kpz/errors.hpp"
#include "kpz/parallel.hpp"
#include "kpz/tw.hpp"

namespace kpz {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double to_unit(std::uint64_t h) { return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53; }

std::uint64_t replica_seed(std::uint64_t seed, std::uint64_t replica) { return mix(seed ^ mix(replica + kGolden)); }

enum Stream : std::uint64_t { kBase = 0, kLevy = 1, kBridge = 2, kGeom = 3 };

// bits(stream, a, b, c) == tail(head(seed, stream, a), b, c)
std::uint64_t head(std::uint64_t seed, std::uint64_t stream, std::uint64_t a) {
  return mix(mix(seed + kGolden * (stream + 1)) ^ (a + 0x632be59bd9b4e019ULL));
}

std::uint64_t tail(std::uint64_t z, std::uint64_t b, std::uint64_t c) {
  z = mix(z ^ (b * 0xd6e8feb86659fd93ULL + 1));
  return mix(z ^ (c * 0xa0761d6478bd642fULL + 2));
}

// Coarse segment layout plus refinement, flattened for the DP loops.
struct Layout {
  std::vector<double> coarse_len;   // per coarse step
  int refine = 0;
  int fine_steps = 0;
};

Layout layout_of(const BrownianField& f) {
  Layout L;
  L.refine = f.refine;
  for (const auto& s : f.segments())
    for (int k = 0; k < s.steps; ++k) L.coarse_len.push_back(s.len / s.steps);
  L.fine_steps = static_cast<int>(L.coarse_len.size()) << f.refine;
  return L;
}

double fine_len(const Layout& L, int k) { return std::ldexp(L.coarse_len[k >> L.refine], -L.refine); }

// Polar-method pair for lines 2p+1 and 2p+2; rejected draws rehash deterministically.
void normal_pair(std::uint64_t hd, std::uint64_t b, std::uint64_t c, double& z1, double& z2) {
  std::uint64_t h = tail(hd, b, c);
  for (;;) {
    const std::uint64_t h2 = mix(h ^ kGolden);
    const double u = 2 * to_unit(h) - 1, v = 2 * to_unit(h2) - 1;
    const double s = u * u + v * v;
    if (s < 1 && s > 0) {
      const double f = std::sqrt(-2.0 * std::log(s) / s);
      z1 = u * f;
      z2 = v * f;
      return;
    }
    h = mix(h2 + 1);
  }
}

// Increments of lines 2p+1 and 2p+2 over fine step k.
// base and levy are head(seed, kBase, p) and head(seed, kLevy, p).
void gen_pair(std::uint64_t base, std::uint64_t levy, const Layout& L, int k, double& d1, double& d2) {
  const int b = k >> L.refine;
  double h = L.coarse_len[b];
  double z1, z2;
  normal_pair(base, b, 0, z1, z2);
  d1 = std::sqrt(h) * z1;
  d2 = std::sqrt(h) * z2;
  for (int l = 1; l <= L.refine; ++l) {
    const int parent = k >> (L.refine - l + 1);
    normal_pair(levy, parent, l, z1, z2);
    const double s = ((k >> (L.refine - l)) & 1) ? -0.5 * std::sqrt(h) : 0.5 * std::sqrt(h);
    d1 = 0.5 * d1 + s * z1;
    d2 = 0.5 * d2 + s * z2;
    h *= 0.5;
  }
}

double gen_increment(const CounterRng& rng, const Layout& L, int line, int k) {
  double d1, d2;
  const int p = (line - 1) / 2;
  gen_pair(head(rng.seed, kBase, p), head(rng.seed, kLevy, p), L, k, d1, d2);
  return (line - 1) % 2 ? d2 : d1;
}

double bridge_u(const CounterRng& rng, int line, int k, int refine) { return rng.uniform(kBridge, line, k, refine); }
double bridge_u(std::uint64_t hd, int k, int refine) { return to_unit(tail(hd, k, refine)); }

// Brownian LPP dynamic program over time steps, lines inner. Records H(t_k1, n1).
JointH run_dp(const BrownianField& f, int k1, int n1, int k2, int n2, BrownianScheme scheme) {
  const Layout L = layout_of(f);
  const CounterRng rng{replica_seed(f.seed, f.replica)};
  const int np = (n2 + 1) / 2;
  std::vector<double> H(n2 + 2, 0.0), B(n2 + 2, 0.0), G(n2 + 2, 0.0), Yp(n2 + 2, 0.0);
  std::vector<double> dB(2 * np);
  std::vector<std::uint64_t> base(np), levy(np), bridge(n2 + 1);
  for (int p = 0; p < np; ++p) {
    base[p] = head(rng.seed, kBase, p);
    levy[p] = head(rng.seed, kLevy, p);
  }
  for (int i = 1; i <= n2; ++i) bridge[i] = head(rng.seed, kBridge, i);
  JointH out;
  for (int k = 0; k < k2; ++k) {
    const double h = fine_len(L, k);
    for (int p = 0; p < np; ++p) gen_pair(base[p], levy[p], L, k, dB[2 * p], dB[2 * p + 1]);
    B[1] += dB[0];
    H[1] = B[1];
    for (int i = 2; i <= n2; ++i) {
      B[i] += dB[i - 1];
      const double y = H[i - 1] - B[i];
      double m = y;
      // the cell max exceeds G only if ln U < -(G-a)(G-b)/h, impossible past 37.5 since U >= 2^-54
      if (scheme == BrownianScheme::bridge && (G[i] - Yp[i]) * (G[i] - y) < 37.5 * h) {
        const double d = y - Yp[i];
        m = 0.5 * (Yp[i] + y + std::sqrt(d * d - 4.0 * h * std::log(bridge_u(bridge[i], k, L.refine))));
      }
      G[i] = std::max(G[i], m);
      H[i] = G[i] + B[i];
      Yp[i] = y;
    }
    if (k + 1 == k1) out.h1 = H[n1];
  }
  out.h2 = H[n2];
  return out;
}

}  // namespace

// ---- CounterRng ----

std::uint64_t CounterRng::bits(std::uint64_t stream, std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
  return tail(head(seed, stream, a), b, c);
}

double CounterRng::uniform(std::uint64_t stream, std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
  return to_unit(bits(stream, a, b, c));
}

double CounterRng::normal(std::uint64_t stream, std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
  double z1, z2;
  normal_pair(head(seed, stream, a), b, c, z1, z2);
  return z1;
}

// ---- geometric ----

void GeomWeights::validate() const {
  if (!(q > 0 && q < 1)) throw argument_error("GeomWeights: need 0 < q < 1");
  if (rows < 1 || cols < 1) throw argument_error("GeomWeights: need rows, cols >= 1");
}

int GeomWeights::operator()(int i, int j) const {
  const CounterRng rng{replica_seed(seed, replica)};
  return static_cast<int>(std::floor(std::log(rng.uniform(kGeom, i, j)) / std::log(q)));
}

long long sample_geom_lpp(const GeomWeights& w, int m, int n) {
  w.validate();
  if (m < 1 || n < 1 || m > w.rows || n > w.cols) throw argument_error("sample_geom_lpp: (m,n) outside the weight grid");
  std::vector<long long> row(n + 1, 0);
  for (int i = 1; i <= m; ++i) {
    row[0] = 0;
    for (int j = 1; j <= n; ++j) {
      const long long best = (i == 1) ? row[j - 1] : (j == 1 ? row[j] : std::max(row[j], row[j - 1]));
      row[j] = best + w(i, j);
    }
  }
  return row[n];
}

// ---- BrownianField ----

std::vector<BrownianField::Segment> BrownianField::segments() const {
  std::vector<Segment> out;
  double t0 = 0;
  auto push = [&](double t1) {
    const double len = t1 - t0;
    const int s = std::max(1, static_cast<int>(std::lround(len / dt)));
    out.push_back({t0, len, s});
    t0 = t1;
  };
  for (double k : knots) push(k);
  push(t_max);
  return out;
}

void BrownianField::validate() const {
  if (n_lines < 1) throw argument_error("BrownianField: need n_lines >= 1");
  if (!(t_max > 0) || !(dt > 0)) throw argument_error("BrownianField: need t_max > 0 and dt > 0");
  if (refine < 0 || refine > 20) throw argument_error("BrownianField: refine out of range");
  double prev = 0;
  for (double k : knots) {
    if (!(k > prev && k < t_max)) throw argument_error("BrownianField: knots must increase inside (0, t_max)");
    prev = k;
  }
  if (knots.empty()) {
    const double r = t_max / dt;
    if (std::abs(r - std::round(r)) > 1e-6 * std::max(1.0, r))
      throw argument_error("BrownianField: t_max is not a multiple of dt");
  }
}

int BrownianField::steps() const {
  int s = 0;
  for (const auto& seg : segments()) s += seg.steps;
  return s << refine;
}

double BrownianField::step_length(int k) const {
  const Layout L = layout_of(*this);
  if (k < 0 || k >= L.fine_steps) throw argument_error("BrownianField: step out of range");
  return fine_len(L, k);
}

double BrownianField::time(int k) const {
  if (k < 0 || k > steps()) throw argument_error("BrownianField: step out of range");
  double t = 0;
  int left = k;
  for (const auto& seg : segments()) {
    const int fs = seg.steps << refine;
    if (left <= fs) return left == fs ? seg.t0 + seg.len : seg.t0 + seg.len * left / fs;
    left -= fs;
    t = seg.t0 + seg.len;
  }
  return t;
}

int BrownianField::grid_index(double mu) const {
  if (!(mu >= 0) || mu > t_max * (1 + 1e-12)) throw argument_error("BrownianField: time outside [0, t_max]");
  int base = 0;
  for (const auto& seg : segments()) {
    const int fs = seg.steps << refine;
    const double h = seg.len / fs;
    if (mu <= seg.t0 + seg.len + 1e-9 * h) {
      const double r = (mu - seg.t0) / h;
      const long j = std::lround(r);
      if (std::abs(r - j) > 1e-6) throw argument_error("BrownianField: time " + std::to_string(mu) + " is off the grid");
      return base + static_cast<int>(j);
    }
    base += fs;
  }
  return base;
}

double BrownianField::increment(int line, int k) const {
  if (line < 1 || line > n_lines) throw argument_error("BrownianField: line out of range");
  const Layout L = layout_of(*this);
  if (k < 0 || k >= L.fine_steps) throw argument_error("BrownianField: step out of range");
  return gen_increment(CounterRng{replica_seed(seed, replica)}, L, line, k);
}

double BrownianField::bridge_uniform(int line, int k) const {
  if (line < 1 || line > n_lines) throw argument_error("BrownianField: line out of range");
  return bridge_u(CounterRng{replica_seed(seed, replica)}, line, k, refine);
}

BrownianField make_field(int n_lines, double t_max, double dt, std::uint64_t seed, std::uint64_t replica) {
  BrownianField f;
  f.n_lines = n_lines;
  f.t_max = t_max;
  f.seed = seed;
  f.replica = replica;
  const double steps = std::max(1.0, std::round(t_max / dt));
  f.dt = t_max / steps;
  f.validate();
  return f;
}

BrownianField make_joint_field(int n_lines, double mu1, double mu2, double dt, std::uint64_t seed,
                               std::uint64_t replica) {
  if (!(mu1 > 0 && mu2 > mu1)) throw argument_error("make_joint_field: need 0 < mu1 < mu2");
  BrownianField f;
  f.n_lines = n_lines;
  f.t_max = mu2;
  f.dt = dt;
  f.seed = seed;
  f.replica = replica;
  f.knots = {mu1};
  f.validate();
  return f;
}

// ---- Brownian sampling ----

double sample_brownian_h(const BrownianField& f, double mu, int n, BrownianScheme scheme) {
  f.validate();
  if (n < 1 || n > f.n_lines) throw argument_error("sample_brownian_h: n outside [1, n_lines]");
  const int k = f.grid_index(mu);
  if (k == 0) return 0;
  return run_dp(f, k, n, k, n, scheme).h2;
}

JointH sample_joint(const BrownianField& f, double mu1, int n1, double mu2, int n2, BrownianScheme scheme) {
  f.validate();
  if (n1 < 1 || n2 < n1) throw argument_error("sample_joint: need 1 <= n1 <= n2");
  if (n2 > f.n_lines) throw argument_error("sample_joint: field has too few lines");
  if (mu2 > f.t_max * (1 + 1e-12)) throw argument_error("sample_joint: field too short");
  if (mu1 > mu2) throw argument_error("sample_joint: need mu1 <= mu2");
  const int k1 = f.grid_index(mu1), k2 = f.grid_index(mu2);
  JointH out = run_dp(f, k1, n1, k2, n2, scheme);
  if (k1 == 0) out.h1 = 0;
  return out;
}

JointH sample_joint(const BrownianField& f, const ScalingEmbedding& emb, BrownianScheme scheme) {
  return sample_joint(f, emb.bp.mu1, emb.bp.n1, emb.bp.mu2, emb.bp.n2, scheme);
}

std::pair<double, double> rescale_to_limit(double h1, double h2, const ScalingEmbedding& emb) {
  const double a = emb.t1 * emb.M, b = emb.t2 * emb.M;
  return {(h1 - 2 * a) / std::cbrt(a) + emb.nu1 * emb.nu1, (h2 - 2 * b) / std::cbrt(b) + emb.nu2 * emb.nu2};
}

std::vector<JointSample> simulate_joint(const ScalingEmbedding& emb, int samples, const SimConfig& cfg) {
  if (samples < 0) throw argument_error("simulate_joint: negative sample count");
  std::vector<JointSample> out(samples);
  const double dt = cfg.dt_fraction * emb.bp.mu2;
  parallel_for(
      samples,
      [&](std::size_t i) {
        BrownianField f = make_joint_field(emb.bp.n2, emb.bp.mu1, emb.bp.mu2, dt, cfg.seed, i);
        f.refine = cfg.refine;
        const JointH h = sample_joint(f, emb, cfg.scheme);
        const auto [x, y] = rescale_to_limit(h.h1, h.h2, emb);
        out[i] = {h.h1, h.h2, x, y};
      },
      cfg.threads);
  return out;
}

std::vector<double> simulate_single(double mu, int n, int samples, const SimConfig& cfg) {
  if (samples < 0) throw argument_error("simulate_single: negative sample count");
  std::vector<double> out(samples);
  parallel_for(
      samples,
      [&](std::size_t i) {
        BrownianField f = make_field(n, mu, cfg.dt_fraction * mu, cfg.seed, i);
        f.refine = cfg.refine;
        out[i] = sample_brownian_h(f, mu, n, cfg.scheme);
      },
      cfg.threads);
  return out;
}

HalvingResult choose_dt_by_halving(double mu, int n, int samples, double tol, const SimConfig& cfg, int max_refine) {
  HalvingResult r;
  SimConfig c = cfg;
  std::vector<double> cur = simulate_single(mu, n, samples, c);
  for (int L = cfg.refine; L <= max_refine; ++L) {
    c.refine = L + 1;
    std::vector<double> next = simulate_single(mu, n, samples, c);
    const double ks = ks_two_sample(cur, next);
    r.history.push_back({L, std::ldexp(cfg.dt_fraction * mu, -L), ks});
    r.refine = L;
    r.dt = std::ldexp(cfg.dt_fraction * mu, -L);
    if (ks < tol) {
      r.samples = std::move(cur);
      return r;
    }
    cur = std::move(next);
  }
  r.refine = max_refine + 1;
  r.dt = std::ldexp(cfg.dt_fraction * mu, -r.refine);
  r.samples = std::move(cur);
  return r;
}

// ---- statistics ----

EmpiricalCdf2D::EmpiricalCdf2D(std::vector<std::pair<double, double>> pts) {
  std::sort(pts.begin(), pts.end());
  xs_.reserve(pts.size());
  ys_.reserve(pts.size());
  for (const auto& [x, y] : pts) {
    xs_.push_back(x);
    ys_.push_back(y);
  }
}

double EmpiricalCdf2D::operator()(double a, double b) const {
  if (xs_.empty()) throw argument_error("EmpiricalCdf2D: no samples");
  const auto end = std::upper_bound(xs_.begin(), xs_.end(), a) - xs_.begin();
  const auto c = std::count_if(ys_.begin(), ys_.begin() + end, [b](double y) { return y <= b; });
  return static_cast<double>(c) / xs_.size();
}

double EmpiricalCdf2D::std_error(double a, double b) const {
  const double p = (*this)(a, b);
  return std::sqrt(std::max(p * (1 - p), 0.25 / xs_.size()) / xs_.size());
}

double ecdf(std::vector<double> xs, double a) {
  if (xs.empty()) throw argument_error("ecdf: no samples");
  return static_cast<double>(std::count_if(xs.begin(), xs.end(), [a](double x) { return x <= a; })) / xs.size();
}

double ks_one_sample(std::vector<double> xs, const std::function<double(double)>& cdf) {
  if (xs.empty()) throw argument_error("ks_one_sample: no samples");
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double F = cdf(xs[i]);
    d = std::max({d, (i + 1) / n - F, F - i / n});
  }
  return d;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw argument_error("ks_two_sample: no samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

std::vector<GeomBrownianRow> geom_to_brownian_check(double q, const std::vector<double>& Ts, double mu, int n,
                                                    int samples, std::uint64_t seed, int threads) {
  if (n < 1 || n > 5) throw argument_error("geom_to_brownian_check: need 1 <= n <= 5");
  if (!(q > 0 && q < 1) || !(mu > 0) || samples < 1) throw argument_error("geom_to_brownian_check: bad arguments");
  SimConfig sc;
  sc.seed = mix(seed);
  sc.threads = threads;
  const std::vector<double> brownian = simulate_single(mu, n, samples, sc);
  std::vector<GeomBrownianRow> rows;
  for (double T : Ts) {
    const int m = static_cast<int>(std::floor(mu * T));
    if (m < 1) throw argument_error("geom_to_brownian_check: mu T < 1");
    std::vector<double> g(samples);
    const double centre = q / (1 - q) * m, scale = std::sqrt(q) / (1 - q) * std::sqrt(T);
    parallel_for(
        samples,
        [&](std::size_t i) {
          GeomWeights w{q, m, n, seed, i};
          g[i] = (static_cast<double>(sample_geom_lpp(w, m, n)) - centre) / scale;
        },
        threads);
    GeomBrownianRow r;
    r.T = T;
    r.m = m;
    r.ks_mc = ks_two_sample(g, brownian);
    r.ks_exact = ks_one_sample(g, [&](double xi) { return gue_finite_cdf(n, mu, xi); });
    rows.push_back(r);
  }
  return rows;
}

}  // namespace kpz
