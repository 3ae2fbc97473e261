#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kpz/sim.hpp"
#include "table.hpp"

namespace kpzcli {

enum ExitCode { kOk = 0, kUsage = 1, kNumeric = 2, kVerifyFailed = 3 };

struct CommandResult {
  Table table;
  int code = kOk;
};

struct Tw2Options {
  double from = -5, to = 3, step = 0.5;
  int nodes = 60;
  double cutoff = 16;
};
CommandResult cmd_tw2(const Tw2Options& o);

struct FttOptions {
  double t1 = 1, t2 = 2, nu1 = 0, nu2 = 0;
  std::vector<double> eta1{0}, eta2{0};
  int shell_max = 2;
  long long qmc_points = 1 << 14;
  std::uint64_t seed = 0x5eed;
};
CommandResult cmd_ftt(const FttOptions& o);

struct KernelsOptions {
  double t1 = 1, t2 = 2, nu1 = 0, nu2 = 0, eta1 = 0, eta2 = 0;
  std::vector<double> x{-2, -1, 0, 1, 2}, y{-2, -1, 0, 1, 2};
  bool contour = false;   // also evaluate the contour forms
};
CommandResult cmd_kernels(const KernelsOptions& o);

struct SimulateOptions {
  double M = 200, t1 = 1, t2 = 2, nu1 = 0, nu2 = 0;
  int samples = 1000;
  std::uint64_t seed = 1;
  double dt_fraction = 1e-3;
  int refine = 0;
  std::string scheme = "bridge";
  std::string dump = "samples.csv";   // empty skips the dump
};
CommandResult cmd_simulate(const SimulateOptions& o);

struct VerifyOptions {
  std::string suite = "all";
};
CommandResult cmd_verify(const VerifyOptions& o);

struct CompareOptions {
  std::string ftt_grid;    // CSV written by `ftt --format csv`
  std::string dump;        // CSV written by `simulate`
  std::string reference;   // second F_tt grid, instead of a dump
  double slack = 0;        // added to 3 (se + trunc_bound)
  bool strict = false;     // exit 3 when a point is outside its tolerance
};
CommandResult cmd_compare(const CompareOptions& o);

struct ConvergenceOptions {
  std::vector<std::string> kernels{"a01", "b1", "c2", "c3"};
  std::vector<double> M{50, 100, 200, 400};
  double x = 0, y = 0;
};
CommandResult cmd_convergence(const ConvergenceOptions& o);

// Sample dump I/O: CSV with header h1,h2,x_m,y_m,seed,M and a JSON sidecar at path + ".json".
void write_dump(const std::string& path, const std::vector<kpz::JointSample>& s, const kpz::ScalingEmbedding& emb,
                const SimulateOptions& o);
std::vector<kpz::JointSample> read_dump(const std::string& path);

}  // namespace kpzcli
