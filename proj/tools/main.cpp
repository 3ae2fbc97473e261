#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "commands.hpp"
#include "kpz/errors.hpp"
#include "kpz/parallel.hpp"

using namespace kpzcli;

int main(int argc, char** argv) {
  CLI::App app{"Two-time distribution of Brownian last-passage percolation: evaluation, simulation, verification"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key=value file with [command] sections; flags override it");

  std::string output, format = "csv";
  int threads = 0;
  app.add_option("-o,--output", output, "write the table here instead of stdout");
  app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--threads", threads, "worker cap (default KPZ_THREADS, then all cores)")->check(CLI::NonNegativeNumber);

  Tw2Options tw2;
  auto* c_tw2 = app.add_subcommand("tw2", "F2 on an eta grid");
  c_tw2->add_option("--from", tw2.from);
  c_tw2->add_option("--to", tw2.to);
  c_tw2->add_option("--step", tw2.step);
  c_tw2->add_option("--nodes", tw2.nodes, "Nystrom nodes");
  c_tw2->add_option("--cutoff", tw2.cutoff, "domain length");

  FttOptions ftt;
  auto* c_ftt = app.add_subcommand("ftt", "two-time distribution on an (eta1*, eta2) grid");
  c_ftt->add_option("--t1", ftt.t1);
  c_ftt->add_option("--t2", ftt.t2);
  c_ftt->add_option("--nu1", ftt.nu1);
  c_ftt->add_option("--nu2", ftt.nu2);
  c_ftt->add_option("--eta1", ftt.eta1, "comma separated")->delimiter(',');
  c_ftt->add_option("--eta2", ftt.eta2, "comma separated")->delimiter(',');
  c_ftt->add_option("--shell-max", ftt.shell_max, "largest r+s+t");
  c_ftt->add_option("--qmc-points", ftt.qmc_points);
  c_ftt->add_option("--seed", ftt.seed);

  KernelsOptions ker;
  auto* c_ker = app.add_subcommand("kernels", "limit kernels on an (x, y) grid");
  c_ker->add_option("--t1", ker.t1);
  c_ker->add_option("--t2", ker.t2);
  c_ker->add_option("--nu1", ker.nu1);
  c_ker->add_option("--nu2", ker.nu2);
  c_ker->add_option("--eta1", ker.eta1);
  c_ker->add_option("--eta2", ker.eta2);
  c_ker->add_option("--x", ker.x)->delimiter(',');
  c_ker->add_option("--y", ker.y)->delimiter(',');
  c_ker->add_flag("--contour", ker.contour, "also the contour forms");

  SimulateOptions sim;
  auto* c_sim = app.add_subcommand("simulate", "Monte Carlo joint samples of the rescaled last-passage times");
  c_sim->add_option("--M", sim.M);
  c_sim->add_option("--t1", sim.t1);
  c_sim->add_option("--t2", sim.t2);
  c_sim->add_option("--nu1", sim.nu1);
  c_sim->add_option("--nu2", sim.nu2);
  c_sim->add_option("--samples", sim.samples);
  c_sim->add_option("--seed", sim.seed);
  c_sim->add_option("--dt-fraction", sim.dt_fraction, "dt = fraction * mu2");
  c_sim->add_option("--refine", sim.refine, "halve dt this many times");
  c_sim->add_option("--scheme", sim.scheme)->check(CLI::IsMember({"bridge", "grid"}));
  c_sim->add_option("--dump", sim.dump, "sample CSV; a .json sidecar is written next to it");

  VerifyOptions ver;
  auto* c_ver = app.add_subcommand("verify", "verification suites");
  c_ver->add_option("suite", ver.suite, "identities, kernels-dual, prelimit, convergence, all");

  CompareOptions cmp;
  auto* c_cmp = app.add_subcommand("compare", "F_tt grid against a sample dump or another grid");
  c_cmp->add_option("--ftt", cmp.ftt_grid, "CSV from `ftt`");
  c_cmp->add_option("--dump", cmp.dump, "CSV from `simulate`");
  c_cmp->add_option("--reference", cmp.reference, "second CSV from `ftt`");
  c_cmp->add_option("--slack", cmp.slack, "added to 3 (se + trunc_bound)");
  c_cmp->add_flag("--strict", cmp.strict, "exit 3 when a point misses its tolerance");

  ConvergenceOptions conv;
  auto* c_conv = app.add_subcommand("convergence", "rescaled finite kernels against their limits over M");
  c_conv->add_option("--kernel", conv.kernels)->delimiter(',');
  c_conv->add_option("--M", conv.M)->delimiter(',');
  c_conv->add_option("--x", conv.x);
  c_conv->add_option("--y", conv.y);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (threads > 0) kpz::set_thread_cap(threads);
    CommandResult r;
    if (*c_tw2) r = cmd_tw2(tw2);
    else if (*c_ftt) r = cmd_ftt(ftt);
    else if (*c_ker) r = cmd_kernels(ker);
    else if (*c_sim) r = cmd_simulate(sim);
    else if (*c_ver) r = cmd_verify(ver);
    else if (*c_cmp) r = cmd_compare(cmp);
    else if (*c_conv) r = cmd_convergence(conv);

    const Format f = format == "json" ? Format::json : Format::csv;
    if (output.empty()) {
      write_table(std::cout, r.table, f);
    } else {
      std::ofstream out(output, std::ios::binary);
      if (!out) throw kpz::argument_error("cannot write " + output);
      write_table(out, r.table, f);
    }
    return r.code;
  } catch (const kpz::argument_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const kpz::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const kpz::unsupported_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  }
}
