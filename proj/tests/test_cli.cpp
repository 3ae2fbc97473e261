#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "commands.hpp"
#include "kpz/errors.hpp"
#include "table.hpp"

using namespace kpzcli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "kpz_cli_tests";
  fs::create_directories(d);
  return d / name;
}

int run(const std::string& args) {
  const std::string cmd = std::string(KPZ_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("CSV quoting round trip") {
  Table t;
  t.columns = {"a", "b,c", "d"};
  t.add({1.5, std::string("x \"q\", y"), true});
  t.add({static_cast<long long>(-3), std::string("line\nbreak"), false});
  std::stringstream ss;
  write_csv(ss, t);
  const Table u = read_csv(ss);
  REQUIRE(u.columns == t.columns);
  REQUIRE(u.rows.size() == 2);
  CHECK(std::get<std::string>(u.rows[0][1]) == "x \"q\", y");
  CHECK(std::get<std::string>(u.rows[1][1]) == "line\nbreak");
  CHECK(as_double(u.rows[0][0]) == 1.5);
  CHECK_THROWS(t.col("missing"));
}

TEST_CASE("doubles print with 17 significant digits") {
  CHECK(std::stod(format_double(0.1)) == 0.1);
  CHECK(std::stod(format_double(1.0 / 3)) == 1.0 / 3);
  CHECK(format_double(2.0) == "2");
}

TEST_CASE("JSON and CSV carry identical numbers") {
  Tw2Options o;
  o.from = -2;
  o.to = 1;
  o.step = 0.5;
  const auto r = cmd_tw2(o);
  std::stringstream csv, js;
  write_csv(csv, r.table);
  write_json(js, r.table);
  const Table back = read_csv(csv);
  std::string line;
  std::size_t i = 0;
  while (std::getline(js, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j["F2"].get<double>() == as_double(back.rows[i][back.col("F2")]));
    CHECK(j["eta"].get<double>() == as_double(back.rows[i][back.col("eta")]));
    CHECK(j["F2"].get<double>() == std::get<double>(r.table.rows[i][1]));
    ++i;
  }
  CHECK(i == r.table.rows.size());
  CHECK(i == 7);
}

TEST_CASE("tw2 grid") {
  const auto r = cmd_tw2({});
  CHECK(r.table.rows.size() == 17);
  CHECK_THROWS_AS(cmd_tw2({0, -1, 0.5, 60, 16}), kpz::argument_error);
}

TEST_CASE("simulate reruns are identical and write a sidecar") {
  SimulateOptions o;
  o.M = 10;
  o.samples = 50;
  o.dt_fraction = 1e-2;
  o.dump = scratch("a.csv").string();
  cmd_simulate(o);
  const std::string first = slurp(o.dump);
  cmd_simulate(o);
  CHECK(slurp(o.dump) == first);
  const auto meta = nlohmann::json::parse(slurp(o.dump + ".json"));
  CHECK(meta["samples"].get<int>() == 50);
  CHECK(meta["scheme"].get<std::string>() == "bridge");
  const auto back = read_dump(o.dump);
  CHECK(back.size() == 50);
}

TEST_CASE("compare: self comparison and an empty dump") {
  FttOptions f;
  f.eta1 = {8};
  f.eta2 = {0, 1};
  const auto grid = cmd_ftt(f);
  const fs::path g = scratch("grid.csv");
  {
    std::ofstream out(g, std::ios::binary);
    write_csv(out, grid.table);
  }
  CompareOptions c;
  c.ftt_grid = g.string();
  c.reference = g.string();
  c.strict = true;
  const auto r = cmd_compare(c);
  CHECK(r.code == kOk);
  for (const auto& row : r.table.rows) CHECK(std::get<double>(row[r.table.col("gap")]) == 0);

  const fs::path empty = scratch("empty.csv");
  {
    std::ofstream out(empty, std::ios::binary);
    out << "h1,h2,x_m,y_m,seed,M\r\n";
  }
  CompareOptions d;
  d.ftt_grid = g.string();
  d.dump = empty.string();
  CHECK_THROWS_AS(cmd_compare(d), kpz::argument_error);
  CompareOptions both = d;
  both.reference = g.string();
  CHECK_THROWS_AS(cmd_compare(both), kpz::argument_error);
}

TEST_CASE("verify suites") {
  CHECK_THROWS_AS(cmd_verify({"nonsense"}), kpz::argument_error);
  const auto r = cmd_verify({"kernels-dual"});
  CHECK(r.code == kOk);
  CHECK(r.table.rows.size() == 8);
  const auto c = cmd_verify({"convergence"});
  // b1 is not monotone in M; the suite says so
  CHECK(c.code == kVerifyFailed);
  std::size_t failing = 0;
  for (const auto& row : c.table.rows)
    if (!std::get<bool>(row[c.table.col("pass")])) {
      ++failing;
      CHECK(std::get<std::string>(row[c.table.col("name")]) == "b1");
    }
  CHECK(failing == 1);
}

TEST_CASE("convergence table") {
  ConvergenceOptions o;
  o.kernels = {"c2"};
  o.M = {50, 100};
  const auto r = cmd_convergence(o);
  CHECK(r.table.rows.size() == 2);
  o.M = {5};
  CHECK_THROWS_AS(cmd_convergence(o), kpz::argument_error);
  o.M = {50};
  o.kernels = {"zz"};
  CHECK_THROWS_AS(cmd_convergence(o), kpz::argument_error);
}

TEST_CASE("binary exit codes") {
  CHECK(run("tw2 --from 0 --to 1 --step 0.5") == 0);
  CHECK(run("verify nonsense") == 1);
  CHECK(run("tw2 --step") == 1);
  CHECK(run("") == 1);
  CHECK(run("--help") == 0);
  CHECK(run("simulate --M 10 --samples 0") == 1);
  CHECK(run("verify convergence") == 3);
  CHECK(run("tw2 --format xml") == 1);
}

TEST_CASE("binary: config file with flag override") {
  const fs::path ini = scratch("cfg.ini"), out = scratch("tw2.csv");
  {
    std::ofstream f(ini);
    f << "[tw2]\nfrom=-1\nto=1\nstep=1\n";
  }
  REQUIRE(run("--config " + ini.string() + " -o " + out.string() + " tw2 --step 0.5") == 0);
  const Table t = read_csv_file(out.string());
  CHECK(t.rows.size() == 5);
  CHECK(as_double(t.rows.front()[0]) == -1);
}
