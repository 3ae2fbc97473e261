#include "commands.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>

#include <json.hpp>

#include "kpz/errors.hpp"
#include "kpz/kernels.hpp"
#include "kpz/prelimit.hpp"
#include "kpz/tw.hpp"
#include "kpz/twotime.hpp"
#include "suites.hpp"

namespace kpzcli {

namespace {

kpz::BrownianScheme scheme_of(const std::string& s) {
  if (s == "bridge") return kpz::BrownianScheme::bridge;
  if (s == "grid") return kpz::BrownianScheme::grid;
  throw kpz::argument_error("unknown scheme '" + s + "' (bridge, grid)");
}

}  // namespace

CommandResult cmd_tw2(const Tw2Options& o) {
  if (!(o.step > 0) || !(o.to >= o.from)) throw kpz::argument_error("tw2: need step > 0 and to >= from");
  kpz::FredholmSpec spec;
  spec.nystrom_nodes = o.nodes;
  spec.domain_cutoff = o.cutoff;
  spec.validate();
  const long n = std::lround(std::floor((o.to - o.from) / o.step + 1e-9)) + 1;
  if (n > 1000000) throw kpz::argument_error("tw2: grid too large");
  CommandResult r;
  r.table.columns = {"eta", "F2"};
  for (long i = 0; i < n; ++i) {
    const double eta = o.from + i * o.step;
    r.table.add({eta, kpz::f2_cdf(eta, spec)});
  }
  return r;
}

CommandResult cmd_ftt(const FttOptions& o) {
  if (o.eta1.empty() || o.eta2.empty()) throw kpz::argument_error("ftt: empty eta grid");
  kpz::TruncationSpec trunc;
  trunc.shell_max = o.shell_max;
  trunc.validate();
  kpz::FttConfig cfg;
  cfg.qmc_points = o.qmc_points;
  cfg.seed = o.seed;
  cfg.validate();
  CommandResult r;
  r.table.columns = {"eta1_star", "eta2", "ftt", "trunc_bound", "f2_eta1", "f2_eta2"};
  for (double e1 : o.eta1)
    for (double e2 : o.eta2) {
      const auto p = kpz::derive_params(o.t1, o.t2, o.nu1, o.nu2, e1, e2);
      const auto f = kpz::ftt(p, e1, trunc, cfg);
      r.table.add({e1, e2, f.value, f.trunc_bound, kpz::f2_cdf(e1), f.f2});
    }
  return r;
}

CommandResult cmd_kernels(const KernelsOptions& o) {
  const auto p = kpz::derive_params(o.t1, o.t2, o.nu1, o.nu2, o.eta1, o.eta2);
  CommandResult r;
  r.table.columns = {"x", "y", "phi1", "psi1", "phi2", "phi3", "phi", "psi"};
  if (o.contour)
    for (const char* c : {"phi1_contour", "psi1_contour", "phi2_contour", "phi3_contour"}) r.table.columns.push_back(c);
  for (double x : o.x)
    for (double y : o.y) {
      const double a = kpz::phi1(p, x, y), b = kpz::psi1(p, x, y), c = kpz::phi2(p, x, y), d = kpz::phi3(p, x, y);
      std::vector<Cell> row{x, y, a, b, c, d, kpz::phi(p, x, y), kpz::psi(p, x, y)};
      if (o.contour) {
        row.push_back(kpz::phi1_contour(p, x, y));
        row.push_back(kpz::psi1_contour(p, x, y));
        row.push_back(kpz::phi2_contour(p, x, y));
        row.push_back(kpz::phi3_contour(p, x, y));
      }
      r.table.add(std::move(row));
    }
  return r;
}

void write_dump(const std::string& path, const std::vector<kpz::JointSample>& s, const kpz::ScalingEmbedding& emb,
                const SimulateOptions& o) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw kpz::argument_error("cannot write " + path);
  Table t;
  t.columns = {"h1", "h2", "x_m", "y_m", "seed", "M"};
  for (const auto& v : s) t.add({v.h1, v.h2, v.x, v.y, static_cast<long long>(o.seed), emb.M});
  write_csv(out, t);

  nlohmann::json meta = {
      {"M", emb.M},          {"t1", emb.t1},       {"t2", emb.t2},         {"nu1", emb.nu1},
      {"nu2", emb.nu2},      {"N1", emb.N1},       {"N2", emb.N2},         {"n1", emb.bp.n1},
      {"n2", emb.bp.n2},     {"mu1", emb.bp.mu1},  {"mu2", emb.bp.mu2},    {"samples", s.size()},
      {"seed", o.seed},      {"dt", o.dt_fraction * emb.bp.mu2},           {"refine", o.refine},
      {"scheme", o.scheme},
  };
  std::ofstream side(path + ".json");
  if (!side) throw kpz::argument_error("cannot write " + path + ".json");
  side << meta.dump(2) << '\n';
}

std::vector<kpz::JointSample> read_dump(const std::string& path) {
  const Table t = read_csv_file(path);
  const auto h1 = t.col("h1"), h2 = t.col("h2"), x = t.col("x_m"), y = t.col("y_m");
  std::vector<kpz::JointSample> out;
  for (const auto& r : t.rows) out.push_back({as_double(r[h1]), as_double(r[h2]), as_double(r[x]), as_double(r[y])});
  return out;
}

CommandResult cmd_simulate(const SimulateOptions& o) {
  if (o.samples < 1) throw kpz::argument_error("simulate: need samples >= 1");
  const auto emb = kpz::make_embedding(o.M, o.t1, o.t2, o.nu1, o.nu2, 0, 0);
  kpz::SimConfig cfg;
  cfg.seed = o.seed;
  cfg.dt_fraction = o.dt_fraction;
  cfg.refine = o.refine;
  cfg.scheme = scheme_of(o.scheme);
  const auto t0 = std::chrono::steady_clock::now();
  const auto s = kpz::simulate_joint(emb, o.samples, cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cerr << fmt::format("simulate: {} samples in {:.2f} s ({:.1f} samples/s)\n", o.samples, secs, o.samples / secs);
  if (!o.dump.empty()) write_dump(o.dump, s, emb, o);

  std::vector<double> xs, ys;
  for (const auto& v : s) {
    xs.push_back(v.x);
    ys.push_back(v.y);
  }
  auto f2 = [](double e) { return kpz::f2_cdf(e); };
  CommandResult r;
  r.table.columns = {"M", "samples", "seed", "n1", "n2", "mu1", "mu2", "ks_x_f2", "ks_y_f2", "seconds"};
  r.table.add({o.M, static_cast<long long>(o.samples), static_cast<long long>(o.seed),
               static_cast<long long>(emb.bp.n1), static_cast<long long>(emb.bp.n2), emb.bp.mu1, emb.bp.mu2,
               kpz::ks_one_sample(xs, f2), kpz::ks_one_sample(ys, f2), secs});
  return r;
}

CommandResult cmd_verify(const VerifyOptions& o) {
  std::vector<CheckRow> rows;
  auto take = [&](std::vector<CheckRow> v) { rows.insert(rows.end(), v.begin(), v.end()); };
  const std::string& s = o.suite;
  if (s != "identities" && s != "kernels-dual" && s != "prelimit" && s != "convergence" && s != "all")
    throw kpz::argument_error("unknown suite '" + s + "' (identities, kernels-dual, prelimit, convergence, all)");
  if (s == "identities" || s == "all") take(suite_identities());
  if (s == "kernels-dual" || s == "all") take(suite_kernels_dual());
  if (s == "prelimit" || s == "all") take(suite_prelimit());
  if (s == "convergence" || s == "all") take(suite_convergence());
  CommandResult r;
  r.table = check_table(rows);
  r.code = all_pass(rows) ? kOk : kVerifyFailed;
  return r;
}

CommandResult cmd_compare(const CompareOptions& o) {
  if (o.ftt_grid.empty()) throw kpz::argument_error("compare: --ftt is required");
  if (o.dump.empty() == o.reference.empty()) throw kpz::argument_error("compare: give exactly one of --dump, --reference");
  const Table g = read_csv_file(o.ftt_grid);
  const auto ce1 = g.col("eta1_star"), ce2 = g.col("eta2"), cf = g.col("ftt"), cb = g.col("trunc_bound");
  if (g.rows.empty()) throw kpz::argument_error("compare: empty F_tt grid");

  CommandResult r;
  r.table.columns = {"eta1_star", "eta2", "ftt", "other", "mc_se", "trunc_bound", "gap", "tolerance", "within"};
  bool ok = true;
  auto emit = [&](double e1, double e2, double f, double other, double se, double bound) {
    const double gap = std::abs(f - other), tol = o.slack + 3 * (se + bound);
    const bool within = gap <= tol;
    ok = ok && within;
    r.table.add({e1, e2, f, other, se, bound, gap, tol, within});
  };
  if (!o.dump.empty()) {
    const auto s = read_dump(o.dump);
    if (s.empty()) throw kpz::argument_error("compare: dump has no samples");
    std::vector<std::pair<double, double>> pts;
    for (const auto& v : s) pts.emplace_back(v.x, v.y);
    const kpz::EmpiricalCdf2D E(std::move(pts));
    for (const auto& row : g.rows) {
      const double e1 = as_double(row[ce1]), e2 = as_double(row[ce2]);
      emit(e1, e2, as_double(row[cf]), E(e1, e2), E.std_error(e1, e2), as_double(row[cb]));
    }
  } else {
    const Table h = read_csv_file(o.reference);
    const auto he1 = h.col("eta1_star"), he2 = h.col("eta2"), hf = h.col("ftt"), hb = h.col("trunc_bound");
    std::map<std::pair<double, double>, std::pair<double, double>> ref;
    for (const auto& row : h.rows) ref[{as_double(row[he1]), as_double(row[he2])}] = {as_double(row[hf]), as_double(row[hb])};
    for (const auto& row : g.rows) {
      const double e1 = as_double(row[ce1]), e2 = as_double(row[ce2]);
      const auto it = ref.find({e1, e2});
      if (it == ref.end()) throw kpz::argument_error(fmt::format("compare: reference lacks ({}, {})", e1, e2));
      emit(e1, e2, as_double(row[cf]), it->second.first, 0.0, as_double(row[cb]) + it->second.second);
    }
  }
  if (o.strict && !ok) r.code = kVerifyFailed;
  return r;
}

CommandResult cmd_convergence(const ConvergenceOptions& o) {
  if (o.M.empty() || o.kernels.empty()) throw kpz::argument_error("convergence: empty M or kernel list");
  for (double M : o.M)
    if (!(M >= 10)) throw kpz::argument_error("convergence: need M >= 10");
  CommandResult r;
  r.table = convergence_table(o.kernels, o.M, o.x, o.y);
  return r;
}

}  // namespace kpzcli
