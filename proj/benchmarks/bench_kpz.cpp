#include <benchmark/benchmark.h>

#include "kpz/kernels.hpp"
#include "kpz/prelimit.hpp"
#include "kpz/sim.hpp"
#include "kpz/specfun.hpp"
#include "kpz/tw.hpp"
#include "kpz/twotime.hpp"

using namespace kpz;

static void BM_AiryAi(benchmark::State& st) {
  double x = -10;
  for (auto _ : st) {
    benchmark::DoNotOptimize(airy_ai(x));
    x = x > 10 ? -10 : x + 0.013;
  }
}
BENCHMARK(BM_AiryAi);

static void BM_AiryKernel(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(airy_kernel(0.3, -1.7));
}
BENCHMARK(BM_AiryKernel);

static void BM_F2(benchmark::State& st) {
  FredholmSpec s;
  s.nystrom_nodes = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(f2_cdf(-1.0, s));
}
BENCHMARK(BM_F2)->Arg(60)->Arg(120)->Unit(benchmark::kMillisecond);

static void BM_GueFinite(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(gue_finite_cdf(n, n, 2.0 * n));
}
BENCHMARK(BM_GueFinite)->Arg(4)->Arg(32);

static void BM_Phi1Series(benchmark::State& st) {
  const auto p = derive_params(1, 2, 0, 0, 0, 0);
  for (auto _ : st) benchmark::DoNotOptimize(phi1(p, 0.5, -0.5));
}
BENCHMARK(BM_Phi1Series)->Unit(benchmark::kMicrosecond);

static void BM_Phi1Contour(benchmark::State& st) {
  const auto p = derive_params(1, 2, 0, 0, 0, 0);
  for (auto _ : st) benchmark::DoNotOptimize(phi1_contour(p, 0.5, -0.5));
}
BENCHMARK(BM_Phi1Contour)->Unit(benchmark::kMillisecond);

static void BM_FttDensity(benchmark::State& st) {
  const auto p = derive_params(1, 2, 0, 0, 1.0, 0);
  TruncationSpec t;
  t.shell_max = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(ftt_density(p, t).value);
}
BENCHMARK(BM_FttDensity)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_JointCdfContour(benchmark::State& st) {
  const GeomLppParams p{0.3, 1, 2, 1, 2};
  for (auto _ : st) benchmark::DoNotOptimize(joint_cdf_contour(p, 2, 3));
}
BENCHMARK(BM_JointCdfContour)->Unit(benchmark::kMillisecond);

static void BM_QPrime(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(q_prime_expansion(BrownianLppParams{1, 2, 1, 2, 0.3, 1.1}).total);
}
BENCHMARK(BM_QPrime)->Unit(benchmark::kMillisecond);

static void BM_RngNormal(benchmark::State& st) {
  const CounterRng r{42};
  std::uint64_t k = 0;
  for (auto _ : st) benchmark::DoNotOptimize(r.normal(1, k++, 0));
}
BENCHMARK(BM_RngNormal);

// cells per second of the Brownian DP
static void BM_BrownianDp(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  std::uint64_t rep = 0;
  const BrownianField probe = make_field(n, n, 1e-2 * n, 5, 0);
  for (auto _ : st) {
    const BrownianField f = make_field(n, n, 1e-2 * n, 5, rep++);
    benchmark::DoNotOptimize(sample_brownian_h(f, n, n));
  }
  st.counters["cells"] = benchmark::Counter(static_cast<double>(probe.steps()) * n, benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_BrownianDp)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
