#include "suites.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "kpz/errors.hpp"
#include "kpz/identities.hpp"
#include "kpz/kernels.hpp"
#include "kpz/prelimit.hpp"

namespace kpzcli {

namespace {

CheckRow row(std::string suite, std::string name, int n, int points, double err, double thr) {
  return {std::move(suite), std::move(name), n, points, err, thr, err < thr, ""};
}

kpz::FiniteKernel kernel_of(const std::string& s) {
  if (s == "a01") return kpz::FiniteKernel::a01;
  if (s == "b1") return kpz::FiniteKernel::b1;
  if (s == "c2") return kpz::FiniteKernel::c2;
  if (s == "c3") return kpz::FiniteKernel::c3;
  throw kpz::argument_error("unknown kernel '" + s + "' (a01, b1, c2, c3)");
}

double kernel_threshold(const std::string& s) { return (s == "a01" || s == "b1") ? 0.1 : 0.05; }

}  // namespace

std::vector<CheckRow> suite_identities() {
  std::vector<CheckRow> out;
  for (const auto& r : kpz::run_identity_suite()) {
    CheckRow c = row("identities", r.name, r.n, r.points_tested, r.max_rel_err, r.threshold);
    c.pass = r.pass;
    out.push_back(c);
  }
  return out;
}

std::vector<CheckRow> suite_kernels_dual() {
  using kpz::ContourKernel;
  std::vector<CheckRow> out;
  const kpz::TwoTimeParams sets[] = {kpz::derive_params(1, 2, 0, 0, 0, 0), kpz::derive_params(1, 3, 0.3, -0.2, 0.5, 1.0)};
  for (int s = 0; s < 2; ++s) {
    const auto& p = sets[s];
    struct K {
      const char* name;
      double (*series)(const kpz::TwoTimeParams&, double, double);
      double (*contour)(const kpz::TwoTimeParams&, double, double);
    };
    const K ks[] = {
        {"phi1", [](const kpz::TwoTimeParams& q, double x, double y) { return kpz::phi1(q, x, y); },
         [](const kpz::TwoTimeParams& q, double x, double y) { return kpz::phi1_contour(q, x, y); }},
        {"psi1", [](const kpz::TwoTimeParams& q, double x, double y) { return kpz::psi1(q, x, y); },
         [](const kpz::TwoTimeParams& q, double x, double y) { return kpz::psi1_contour(q, x, y); }},
        {"phi2", [](const kpz::TwoTimeParams& q, double x, double y) { return kpz::phi2(q, x, y); },
         [](const kpz::TwoTimeParams& q, double x, double y) { return kpz::phi2_contour(q, x, y); }},
        {"phi3", [](const kpz::TwoTimeParams& q, double x, double y) { return kpz::phi3(q, x, y); },
         [](const kpz::TwoTimeParams& q, double x, double y) { return kpz::phi3_contour(q, x, y); }},
    };
    for (const auto& k : ks) {
      double err = 0;
      int pts = 0;
      for (int i = -2; i <= 2; ++i)
        for (int j = -2; j <= 2; ++j, ++pts) err = std::max(err, std::abs(k.series(p, i, j) - k.contour(p, i, j)));
      CheckRow c = row("kernels-dual", k.name, s + 1, pts, err, 1e-6);
      c.detail = fmt::format("t=({},{}) nu=({},{}) eta=({},{})", p.t1, p.t2, p.nu1, p.nu2, p.eta1, p.eta2);
      out.push_back(c);
    }
  }
  return out;
}

std::vector<CheckRow> suite_prelimit() {
  std::vector<CheckRow> out;
  const double q = 0.3;
  {
    const kpz::GeomLppParams p{q, 1, 2, 1, 2};
    double err = 0;
    for (int v1 = 0; v1 <= 4; ++v1)
      for (int v2 = 0; v2 <= 4; ++v2)
        err = std::max(err, std::abs(kpz::joint_cdf_contour(p, v1, v2) - kpz::joint_cdf_enumerate(p, v1, v2)));
    out.push_back(row("prelimit", "joint_cdf_contour", 2, 25, err, 1e-8));
  }
  {
    double err = 0;
    int pts = 0;
    for (int a = 0; a <= 4; ++a)
      for (int b = a; b <= 4; ++b, ++pts)
        err = std::max(err, std::abs(kpz::vector_prob({a, b}, 2, 2, q) - kpz::vector_prob_enumerate({a, b}, 2, 2, q)));
    out.push_back(row("prelimit", "vector_prob", 2, pts, err, 1e-8));
  }
  {
    double err = 0;
    int pts = 0;
    for (int a = 0; a <= 2; ++a)
      for (int b = a; b <= 2; ++b)
        for (int c = a; c <= 3; ++c)
          for (int d = std::max(b, c); d <= 4; ++d, ++pts)
            err = std::max(err, std::abs(kpz::transition_prob({a, b}, {c, d}, 1, 2, 2, q) -
                                         kpz::transition_prob_enumerate({a, b}, {c, d}, 1, 2, 2, q)));
    out.push_back(row("prelimit", "transition_prob", 2, pts, err, 1e-8));
  }
  for (const auto& bp : {kpz::BrownianLppParams{1, 2, 1.0, 2.0, 0.3, 1.1}, kpz::BrownianLppParams{2, 3, 1.2, 2.0, 1.0, 1.5}}) {
    const auto kt = kpz::kernel_tables(bp);
    const double six = kpz::q_prime_expansion(kt).total;
    const double perm = kpz::q_prime_permutation(kt), direct = kpz::q_prime_direct(bp);
    const double e1 = std::max(std::abs(six - perm), std::abs(six - direct)) / std::max(std::abs(six), 1e-300);
    CheckRow c = row("prelimit", "q_prime_three_way", bp.n2, 3, e1, 1e-8);
    c.detail = fmt::format("n1={} n2={} Q'={}", bp.n1, bp.n2, six);
    out.push_back(c);
    const double b0 = kpz::q_block_sum(kt, 0), p0 = kpz::q_permutation_sum(kt, 0), d0 = kpz::q_direct(bp, 0);
    const double e0 = std::max(std::abs(b0 - p0), std::abs(b0 - d0)) / std::max(std::abs(b0), 1e-300);
    c = row("prelimit", "q_zero_three_way", bp.n2, 3, e0, 1e-8);
    c.detail = fmt::format("n1={} n2={} Q(0)={}", bp.n1, bp.n2, b0);
    out.push_back(c);
  }
  return out;
}

std::vector<CheckRow> suite_convergence(const std::vector<double>& Ms, double x, double y) {
  std::vector<CheckRow> out;
  for (const std::string name : {"a01", "b1", "c2", "c3"}) {
    std::vector<double> errs;
    for (double M : Ms) errs.push_back(kpz::rescaled_kernel_error(M, kernel_of(name), x, y));
    bool mono = true;
    for (std::size_t i = 1; i < errs.size(); ++i) mono = mono && errs[i] < errs[i - 1];
    CheckRow c = row("convergence", name, 0, static_cast<int>(errs.size()), errs.back(), kernel_threshold(name));
    c.pass = mono && errs.back() < c.threshold;
    std::string d = mono ? "monotone;" : "NOT monotone;";
    for (std::size_t i = 0; i < errs.size(); ++i) d += fmt::format(" M={}:{:.4e}", Ms[i], errs[i]);
    c.detail = d;
    out.push_back(c);
  }
  return out;
}

Table convergence_table(const std::vector<std::string>& kernels, const std::vector<double>& Ms, double x, double y) {
  Table t;
  t.columns = {"kernel", "M", "x", "y", "error", "decreased"};
  for (const auto& k : kernels) {
    const auto kind = kernel_of(k);
    double prev = INFINITY;
    for (double M : Ms) {
      const double e = kpz::rescaled_kernel_error(M, kind, x, y);
      t.add({k, M, x, y, e, e < prev});
      prev = e;
    }
  }
  return t;
}

Table check_table(const std::vector<CheckRow>& rows) {
  Table t;
  t.columns = {"suite", "name", "n", "points", "max_err", "threshold", "pass", "detail"};
  for (const auto& r : rows)
    t.add({r.suite, r.name, static_cast<long long>(r.n), static_cast<long long>(r.points), r.max_err, r.threshold,
           r.pass, r.detail});
  return t;
}

bool all_pass(const std::vector<CheckRow>& rows) {
  return std::all_of(rows.begin(), rows.end(), [](const CheckRow& r) { return r.pass; });
}

}  // namespace kpzcli
