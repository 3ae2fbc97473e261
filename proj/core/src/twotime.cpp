#include "kpz/twotime.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kpz/errors.hpp"
#include "kpz/parallel.hpp"
#include "kpz/tw.hpp"

namespace kpz {

void PointConfig::validate() const {
  for (double v : x)
    if (!(v <= 0)) throw argument_error("PointConfig: x entries must be <= 0");
  for (double v : xp)
    if (!(v <= 0)) throw argument_error("PointConfig: x' entries must be <= 0");
  for (double v : y)
    if (!(v >= 0)) throw argument_error("PointConfig: y entries must be >= 0");
  for (double v : yp)
    if (!(v >= 0)) throw argument_error("PointConfig: y' entries must be >= 0");
}

void TruncationSpec::validate() const {
  if (rmax < 0 || smax < 0 || tmax < 0 || shell_max < 0) throw argument_error("TruncationSpec: negative maximum");
  if (!(term_tol > 0)) throw argument_error("TruncationSpec: term_tol must be > 0");
  if (!(eta1_cutoff > 0)) throw argument_error("TruncationSpec: eta1_cutoff must be > 0");
}

void FttConfig::validate() const {
  if (eta1_panels < 1 || eta1_nodes < 2) throw argument_error("FttConfig: eta1 rule too small");
  if (space_panels < 1 || space_nodes < 2) throw argument_error("FttConfig: spatial rule too small");
  if (!(space_cutoff > 0)) throw argument_error("FttConfig: space_cutoff must be > 0");
  if (qmc_points < 1 || qmc_shifts < 2) throw argument_error("FttConfig: qmc settings");
}

double small_det(std::vector<double>& a, int m) {
  double det = 1;
  for (int k = 0; k < m; ++k) {
    int piv = k;
    double best = std::abs(a[k * m + k]);
    for (int i = k + 1; i < m; ++i)
      if (std::abs(a[i * m + k]) > best) {
        best = std::abs(a[i * m + k]);
        piv = i;
      }
    if (best == 0) return 0.0;
    if (piv != k) {
      for (int j = 0; j < m; ++j) std::swap(a[k * m + j], a[piv * m + j]);
      det = -det;
    }
    const double d = a[k * m + k];
    det *= d;
    for (int i = k + 1; i < m; ++i) {
      const double f = a[i * m + k] / d;
      if (f == 0) continue;
      for (int j = k + 1; j < m; ++j) a[i * m + j] -= f * a[k * m + j];
    }
  }
  return det;
}

namespace {

enum class RowKernel { phi, psi };

// Row/column slots of a W matrix: point index into the kernel matrices and the kernel used for the row.
struct Slot {
  std::size_t pt;
  RowKernel k;
};

double assemble_det(const KernelMatrices& km, const std::vector<Slot>& slots, std::vector<double>& buf) {
  const int m = static_cast<int>(slots.size());
  buf.resize(static_cast<std::size_t>(m) * m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      buf[a * m + b] = slots[a].k == RowKernel::phi ? km.at_phi(slots[a].pt, slots[b].pt)
                                                    : km.at_psi(slots[a].pt, slots[b].pt);
  return small_det(buf, m);
}

double w_det(const TwoTimeParams& p, const PointConfig& c, const KernelEvalConfig& cfg, RowKernel zero_row) {
  c.validate();
  std::vector<double> pts;
  std::vector<Slot> slots;
  auto add = [&](const std::vector<double>& v, RowKernel k) {
    for (double u : v) {
      slots.push_back({pts.size(), k});
      pts.push_back(u);
    }
  };
  add(c.x, RowKernel::psi);
  add(c.xp, RowKernel::phi);
  add({0.0}, zero_row);
  add(c.y, RowKernel::phi);
  add(c.yp, RowKernel::psi);
  const KernelMatrices km = kernel_matrices(p, pts, cfg);
  std::vector<double> buf;
  return assemble_det(km, slots, buf);
}

double factorial(int n) {
  double f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

double prefactor(int r, int s, int t, SumKind kind) {
  if (kind == SumKind::first) return 1.0 / (factorial(r) * factorial(r) * factorial(s) * factorial(t));
  return 1.0 / (factorial(r) * factorial(r - 1) * factorial(s) * factorial(t));
}

void check_term(int r, int s, int t, SumKind kind) {
  if (r < 0 || s < 0 || t < 0) throw argument_error("ftt term: negative index");
  if (kind == SumKind::second && r < 1) throw argument_error("ftt term: second sum needs r >= 1");
}

// Quadrature nodes for the spatial half-lines and the kernel matrices on all of them.
struct NodeSet {
  std::vector<std::size_t> lf, lc, rf, rc;  // point indices
  std::vector<double> wlf, wlc, wrf, wrc;   // weights
  KernelMatrices km;
};

NodeSet make_nodeset(const TwoTimeParams& p, const FttConfig& cfg) {
  NodeSet ns;
  const int nf = cfg.space_nodes, nc = std::max(2, cfg.space_nodes / 2);
  const double L = cfg.space_cutoff;
  const AxisRule lf = composite_rule(-L, 0.0, cfg.space_panels, nf);
  const AxisRule lc = composite_rule(-L, 0.0, cfg.space_panels, nc);
  const AxisRule rf = composite_rule(0.0, L, cfg.space_panels, nf);
  const AxisRule rc = composite_rule(0.0, L, cfg.space_panels, nc);
  std::vector<double> pts{0.0};
  auto add = [&](const AxisRule& r, std::vector<std::size_t>& idx, std::vector<double>& w) {
    for (std::size_t i = 0; i < r.x.size(); ++i) {
      idx.push_back(pts.size());
      pts.push_back(r.x[i]);
      w.push_back(r.w[i]);
    }
  };
  add(lf, ns.lf, ns.wlf);
  add(lc, ns.lc, ns.wlc);
  add(rf, ns.rf, ns.wrf);
  add(rc, ns.rc, ns.wrc);
  ns.km = kernel_matrices(p, pts, cfg.kernel);
  return ns;
}

struct Axis {
  const std::vector<std::size_t>* idx;
  const std::vector<double>* w;
};

// sum over node tuples of prod(w) * det
double tensor_det_sum(const KernelMatrices& km, const std::vector<Axis>& axes, std::vector<Slot> slots,
                      const std::vector<std::size_t>& slot_of_axis) {
  const std::size_t d = axes.size();
  std::size_t total = 1;
  for (const auto& a : axes) total *= a.idx->size();
  std::vector<double> buf;
  std::vector<std::size_t> digit(d, 0);
  double sum = 0;
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    double w = 1;
    for (std::size_t k = 0; k < d; ++k) {
      const std::size_t n = axes[k].idx->size();
      digit[k] = rem % n;
      rem /= n;
      slots[slot_of_axis[k]].pt = (*axes[k].idx)[digit[k]];
      w *= (*axes[k].w)[digit[k]];
    }
    sum += w * assemble_det(km, slots, buf);
  }
  return sum;
}

struct TermLayout {
  std::vector<Slot> slots;                 // zero slot filled, others placeholders
  std::vector<bool> left;                  // per spatial axis: x-type (left) or y-type (right)
  std::vector<std::size_t> slot_of_axis;
};

TermLayout layout(int r, int s, int t, SumKind kind) {
  TermLayout L;
  const int r2 = kind == SumKind::first ? r : r - 1;
  auto push = [&](int n, RowKernel k, bool left) {
    for (int i = 0; i < n; ++i) {
      L.slot_of_axis.push_back(L.slots.size());
      L.left.push_back(left);
      L.slots.push_back({0, k});
    }
  };
  push(r, RowKernel::psi, true);
  push(s, RowKernel::phi, true);
  L.slots.push_back({0, kind == SumKind::first ? RowKernel::psi : RowKernel::phi});  // point 0 is index 0
  push(r2, RowKernel::phi, false);
  push(t, RowKernel::psi, false);
  return L;
}

TermResult term_on_nodeset(const NodeSet& ns, int r, int s, int t, SumKind kind) {
  TermResult tr;
  tr.r = r;
  tr.s = s;
  tr.t = t;
  tr.kind = kind;
  const TermLayout L = layout(r, s, t, kind);
  tr.dim = static_cast<int>(L.left.size());
  const double pre = -prefactor(r, s, t, kind);
  std::vector<Axis> fine, coarse;
  for (bool left : L.left) {
    fine.push_back(left ? Axis{&ns.lf, &ns.wlf} : Axis{&ns.rf, &ns.wrf});
    coarse.push_back(left ? Axis{&ns.lc, &ns.wlc} : Axis{&ns.rc, &ns.wrc});
  }
  const double vf = tensor_det_sum(ns.km, fine, L.slots, L.slot_of_axis);
  const double vc = tr.dim == 0 ? vf : tensor_det_sum(ns.km, coarse, L.slots, L.slot_of_axis);
  tr.value = pre * vf;
  tr.err_est = std::abs(pre * (vf - vc));
  return tr;
}

TermResult term_qmc(const TwoTimeParams& p, int r, int s, int t, SumKind kind, const FttConfig& cfg) {
  TermResult tr;
  tr.r = r;
  tr.s = s;
  tr.t = t;
  tr.kind = kind;
  const TermLayout L = layout(r, s, t, kind);
  tr.dim = static_cast<int>(L.left.size());
  std::vector<AxisDomain> doms;
  for (bool left : L.left) doms.push_back(left ? AxisDomain::left() : AxisDomain::right());
  auto f = [&](std::span<const double> u) {
    std::vector<double> pts{0.0};
    std::vector<Slot> slots = L.slots;
    for (std::size_t k = 0; k < u.size(); ++k) {
      slots[L.slot_of_axis[k]].pt = pts.size();
      pts.push_back(u[k]);
    }
    const KernelMatrices km = kernel_matrices(p, pts, cfg.kernel);
    std::vector<double> buf;
    return assemble_det(km, slots, buf);
  };
  QmcOptions opt;
  opt.shifts = cfg.qmc_shifts;
  opt.mapping = Mapping::exp_map;
  opt.scale = 1.5;
  const QuadResult q = qmc_integrate(f, doms, cfg.qmc_points, cfg.seed, opt);
  const double pre = -prefactor(r, s, t, kind);
  tr.value = pre * q.value;
  tr.err_est = std::abs(pre) * q.err_est;
  return tr;
}

struct TermId {
  int r, s, t;
  SumKind kind;
};

std::vector<TermId> shell_terms(int shell, const TruncationSpec& tr) {
  std::vector<TermId> out;
  for (int r = 0; r <= std::min(shell, tr.rmax); ++r)
    for (int s = 0; s <= std::min(shell - r, tr.smax); ++s) {
      const int t = shell - r - s;
      if (t > tr.tmax) continue;
      out.push_back({r, s, t, SumKind::first});
      if (r >= 1) out.push_back({r, s, t, SumKind::second});
    }
  return out;
}

int term_dim(const TermId& id) {
  return 2 * id.r + id.s + id.t - (id.kind == SumKind::second ? 1 : 0);
}

}  // namespace

double w1_det(const TwoTimeParams& p, const PointConfig& c, const KernelEvalConfig& cfg) {
  if (c.y.size() != c.x.size()) throw argument_error("w1_det: y must have the same length as x");
  return w_det(p, c, cfg, RowKernel::psi);
}

double w2_det(const TwoTimeParams& p, const PointConfig& c, const KernelEvalConfig& cfg) {
  if (c.x.empty()) throw argument_error("w2_det: needs r >= 1");
  if (c.y.size() + 1 != c.x.size()) throw argument_error("w2_det: y must have length r - 1");
  return w_det(p, c, cfg, RowKernel::phi);
}

std::string term_name(const TermResult& t) {
  std::ostringstream os;
  os << (t.kind == SumKind::first ? "W1" : "W2") << "(r=" << t.r << ",s=" << t.s << ",t=" << t.t << ")";
  return os.str();
}

TermResult ftt_term_density(const TwoTimeParams& p, int r, int s, int t, SumKind kind, const FttConfig& cfg) {
  cfg.validate();
  check_term(r, s, t, kind);
  if (term_dim({r, s, t, kind}) > 4) return term_qmc(p, r, s, t, kind, cfg);
  const NodeSet ns = make_nodeset(p, cfg);
  return term_on_nodeset(ns, r, s, t, kind);
}

namespace {

AxisRule eta1_rule(double eta1_star, const TruncationSpec& trunc, const FttConfig& cfg) {
  // the density is negligible past eta1 = 8 whatever eta1* is
  const double hi = std::max(eta1_star + trunc.eta1_cutoff, 8.0);
  const int panels = std::max(cfg.eta1_panels, static_cast<int>(std::ceil((hi - eta1_star) / 2.0)));
  return composite_rule(eta1_star, hi, panels, cfg.eta1_nodes);
}

// Integrates the given terms over eta1, sharing kernel matrices per eta1 node.
std::vector<TermResult> integrate_terms(const TwoTimeParams& p_base, const std::vector<TermId>& ids,
                                        const AxisRule& er, std::vector<NodeSet>& cache, const FttConfig& cfg,
                                        double& last_node_density) {
  const std::size_t ne = er.x.size();
  if (cache.empty()) {
    cache.resize(ne);
    parallel_for(ne, [&](std::size_t i) { cache[i] = make_nodeset(with_eta1(p_base, er.x[i]), cfg); });
  }
  std::vector<std::vector<TermResult>> per(ne, std::vector<TermResult>(ids.size()));
  parallel_for(ne, [&](std::size_t i) {
    for (std::size_t k = 0; k < ids.size(); ++k) {
      const auto& id = ids[k];
      try {
        per[i][k] = term_dim(id) > 4 ? term_qmc(with_eta1(p_base, er.x[i]), id.r, id.s, id.t, id.kind, cfg)
                                     : term_on_nodeset(cache[i], id.r, id.s, id.t, id.kind);
      } catch (const std::exception& e) {
        TermResult tr;
        tr.r = id.r;
        tr.s = id.s;
        tr.t = id.t;
        tr.kind = id.kind;
        throw numeric_error(term_name(tr) + " at eta1=" + std::to_string(er.x[i]) + ": " + e.what());
      }
    }
  });
  std::vector<TermResult> out(ids.size());
  last_node_density = 0;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    out[k] = per[0][k];
    out[k].value = 0;
    out[k].err_est = 0;
    for (std::size_t i = 0; i < ne; ++i) {
      out[k].value += er.w[i] * per[i][k].value;
      out[k].err_est += er.w[i] * per[i][k].err_est;
    }
    last_node_density += std::abs(per[ne - 1][k].value);
  }
  return out;
}

}  // namespace

TermResult ftt_term(const TwoTimeParams& p_base, int r, int s, int t, SumKind kind, double eta1_star,
                    const TruncationSpec& trunc, const FttConfig& cfg) {
  trunc.validate();
  cfg.validate();
  check_term(r, s, t, kind);
  if (!std::isfinite(eta1_star)) throw argument_error("ftt_term: eta1_star must be finite");
  const AxisRule er = eta1_rule(eta1_star, trunc, cfg);
  std::vector<NodeSet> cache;
  double tail = 0;
  auto res = integrate_terms(p_base, {{r, s, t, kind}}, er, cache, cfg, tail);
  if (!(tail < cfg.eta1_guard)) {
    std::ostringstream os;
    os << term_name(res[0]) << ": integrand " << tail << " at the upper eta1 node exceeds guard";
    throw truncation_error(os.str());
  }
  return res[0];
}

DensityResult ftt_density(const TwoTimeParams& p, const TruncationSpec& trunc, const FttConfig& cfg) {
  trunc.validate();
  cfg.validate();
  DensityResult out;
  const NodeSet ns = make_nodeset(p, cfg);
  for (int shell = 0; shell <= trunc.shell_max; ++shell)
    for (const auto& id : shell_terms(shell, trunc)) {
      TermResult tr = term_dim(id) > 4 ? term_qmc(p, id.r, id.s, id.t, id.kind, cfg)
                                       : term_on_nodeset(ns, id.r, id.s, id.t, id.kind);
      out.value -= tr.value;
      out.err_est += tr.err_est;
      out.terms.push_back(tr);
    }
  return out;
}

FttResult ftt(const TwoTimeParams& p_base, double eta1_star, const TruncationSpec& trunc, const FttConfig& cfg) {
  trunc.validate();
  cfg.validate();
  if (!std::isfinite(eta1_star)) throw argument_error("ftt: eta1_star must be finite");
  FttResult res;
  res.f2 = f2_cdf(p_base.eta2);
  res.value = res.f2;
  const AxisRule er = eta1_rule(eta1_star, trunc, cfg);
  std::vector<NodeSet> cache;
  double err = 0, tail_total = 0;
  bool stopped_early = false;
  for (int shell = 0; shell <= trunc.shell_max; ++shell) {
    const auto ids = shell_terms(shell, trunc);
    if (ids.empty()) break;
    double tail = 0;
    const auto terms = integrate_terms(p_base, ids, er, cache, cfg, tail);
    tail_total += tail;
    double shell_abs = 0, shell_max_abs = 0;
    for (const auto& t : terms) {
      res.value += t.value;
      err += t.err_est;
      shell_abs += std::abs(t.value);
      shell_max_abs = std::max(shell_max_abs, std::abs(t.value));
      res.terms.push_back(t);
    }
    res.shell_abs.push_back(shell_abs);
    if (shell > 0 && shell_max_abs < trunc.term_tol) {
      stopped_early = true;
      break;
    }
  }
  if (!(tail_total < cfg.eta1_guard)) {
    std::ostringstream os;
    os << "ftt: series density " << tail_total << " at the upper eta1 node exceeds guard; raise eta1_cutoff";
    throw truncation_error(os.str());
  }
  // the first excluded shell is estimated by the last included one
  const double excluded = stopped_early ? trunc.term_tol : res.shell_abs.back();
  res.trunc_bound = excluded + err;
  return res;
}

}  // namespace kpz
