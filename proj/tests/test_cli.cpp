#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>

#include "dualkit/cli.hpp"

namespace fs = std::filesystem;
using namespace dualkit;

namespace {

struct Scratch {
  fs::path dir;
  Scratch() : dir(fs::temp_directory_path() / ("dualkit_cli_" + std::to_string(::getpid()))) { fs::create_directories(dir); }
  ~Scratch() { fs::remove_all(dir); }
  std::string write(const std::string& name, const std::string& text) const
  {
    const fs::path p = dir / name;
    std::ofstream(p) << text;
    return p.string();
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

const Scratch& scratch()
{
  static const Scratch s;
  return s;
}

std::string slurp(const std::string& path)
{
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

// Runs the installed binary through the shell; env is a prefix such as "DUALKIT_THREADS=4".
Result invoke(const std::string& args, const std::string& env = "")
{
  static int counter = 0;
  const std::string tag = std::to_string(++counter);
  const std::string out = scratch().path("out" + tag), err = scratch().path("err" + tag);
  const std::string cmd = env + " '" + std::string(DUALKIT_CLI_PATH) + "' " + args + " >'" + out + "' 2>'" + err + "'";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string without_time(const std::string& trace) { return std::regex_replace(trace, std::regex("\"time_s\":[^,}]*,?"), ""); }

} // namespace

TEST_CASE("run: von Neumann on the two-lines problem converges")
{
  const std::string cfg =
      scratch().write("vn.json", R"({"problem": "two_lines", "algorithm": "von_neumann", "solver": {"max_iters": 500}})");
  const std::string out = scratch().path("vn.jsonl");
  const Result r = invoke("run --config '" + cfg + "' --out '" + out + "'");
  CHECK(r.code == 0);
  std::istringstream lines(slurp(out));
  std::string line, last;
  while (std::getline(lines, line)) {
    if (!line.empty()) { last = line; }
  }
  const auto j = nlohmann::json::parse(last);
  CHECK(j.at("residuals").at("infeasibility").get<double>() <= 1e-8);
  const auto u = j.at("vars").at("u").at(0);
  CHECK(std::abs(u.at(0).get<double>() - 1.0) <= 1e-8);
  CHECK(std::abs(u.at(1).get<double>() - 1.0) <= 1e-8);
}

TEST_CASE("run: exit codes")
{
  const std::string zero =
      scratch().write("zero.json", R"({"problem": "two_lines", "algorithm": "von_neumann", "solver": {"max_iters": 0}})");
  CHECK(invoke("run --config '" + zero + "' --out /dev/null").code == 2);

  const std::string unknown = scratch().write("unknown.json", R"({"problem": "two_lines", "algorithm": "nope"})");
  const Result u = invoke("run --config '" + unknown + "'");
  CHECK(u.code != 0);
  CHECK(u.err.find("nope") != std::string::npos);

  const std::string chyy = scratch().write(
      "chyy.json", R"({"problem": "chyy", "algorithm": "admm_plain", "solver": {"max_iters": 5000}})");
  CHECK(invoke("run --config '" + chyy + "' --out /dev/null").code == 3);
  const std::string sharing = scratch().write(
      "sharing.json", R"({"problem": "chyy", "algorithm": "admm_dualization_based", "solver": {"max_iters": 20000}})");
  CHECK(invoke("run --config '" + sharing + "' --out /dev/null").code == 0);

  CHECK(invoke("run --config '" + scratch().path("missing.json") + "'").code == 4);
  CHECK(invoke("").code == 4);
  CHECK(invoke("frobnicate").code == 4);
}

TEST_CASE("run: config diagnostics name the field or position")
{
  const std::string typo = scratch().write(
      "typo.json", R"({"problem": "two_lines", "algorithm": "dykstra", "solver": {"max_iter": 3}})");
  const Result a = invoke("run --config '" + typo + "'");
  CHECK(a.code == 4);
  CHECK(a.err.find("solver.max_iter") != std::string::npos);

  const std::string broken = scratch().write("broken.json", "{\"problem\": \"two_lines\",\n \"algorithm\": }");
  const Result b = invoke("run --config '" + broken + "'");
  CHECK(b.code == 4);
  CHECK(b.err.find("broken.json:2:") != std::string::npos);

  const std::string wrong = scratch().write(
      "wrong.json", R"({"problem": "two_lines", "algorithm": "dykstra", "solver": {"max_iters": "ten"}})");
  CHECK(invoke("run --config '" + wrong + "'").err.find("solver.max_iters") != std::string::npos);

  const std::string mismatch = scratch().write("mismatch.json", R"({"problem": "two_lines", "algorithm": "admm_plain"})");
  CHECK(invoke("run --config '" + mismatch + "'").code == 4);
}

TEST_CASE("verify: spec examples")
{
  const Result ok = invoke("verify --pair dykstra-ssc --seed 1 --iters 30 --tol 1e-8");
  CHECK(ok.code == 0);
  const auto rep = nlohmann::json::parse(ok.out);
  CHECK(rep.at("pass").get<bool>());
  CHECK(rep.at("pair") == "dykstra-ssc");
  CHECK(rep.at("iterations") == 30);

  CHECK(invoke("verify --pair dykstra-ssc --seed 1 --iters 30 --tol 0").code == 1);
  CHECK(invoke("verify --pair dykstra-ssc --seed 1 --iters 0 --tol 1e-8").code == 4);
  CHECK(invoke("verify --pair no-such --seed 1 --iters 5 --tol 1e-8").code == 4);
  CHECK(invoke("verify --pair dykstra-ssc --seed 1 --iters 5").code == 4);

  const std::string file = scratch().path("report.json");
  CHECK(invoke("verify --pair admm2-dr --seed 2 --iters 10 --tol 1e-8 --out '" + file + "'").code == 0);
  CHECK(nlohmann::json::parse(slurp(file)).at("theorem_id").get<std::string>().size() > 0);
}

TEST_CASE("list: registries and stability")
{
  const Result a = invoke("list");
  const Result b = invoke("list");
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.find("dykstra") != std::string::npos);
  CHECK(a.out.find("admm2-dr") != std::string::npos);
  for (const auto& e : cli::algorithm_registry()) { CHECK(a.out.find("  " + e.id + "  ") != std::string::npos); }
  for (const auto& e : cli::problem_registry()) { CHECK(a.out.find("  " + e.id + "  ") != std::string::npos); }
}

TEST_CASE("traces are identical across invocations and thread counts")
{
  const std::vector<std::string> configs = {
      R"({"problem": {"id": "random_pocs", "dim": 6, "sets": 4}, "algorithm": "parallel_dykstra", "solver": {"max_iters": 40, "seed": 3}})",
      R"({"problem": {"id": "random_splitting", "dim": 5, "blocks": 4}, "algorithm": "parallel_dr", "solver": {"max_iters": 30, "seed": 5}})",
      R"({"problem": {"id": "random_multilinear", "dim": 6, "blocks": 3}, "algorithm": "psc", "solver": {"max_iters": 30, "seed": 2}})",
      R"({"problem": {"id": "random_sharing", "blocks": 3}, "algorithm": "admm_dualization_parallel", "solver": {"max_iters": 30}})",
      R"({"problem": {"id": "random_constrained", "blocks": 3}, "algorithm": "admm_random_permuted", "solver": {"max_iters": 30, "seed": 9}})",
  };
  int k = 0;
  for (const auto& c : configs) {
    const std::string cfg = scratch().write("det" + std::to_string(++k) + ".json", c);
    std::vector<std::string> traces;
    for (const char* env : {"DUALKIT_THREADS=1", "DUALKIT_THREADS=4", "DUALKIT_THREADS=4"}) {
      const std::string out = scratch().path("det" + std::to_string(k) + "_" + std::to_string(traces.size()) + ".jsonl");
      const Result r = invoke("run --config '" + cfg + "' --out '" + out + "'", env);
      CAPTURE(c);
      CHECK(r.code != 4);
      traces.push_back(without_time(slurp(out)));
    }
    CAPTURE(c);
    CHECK_FALSE(traces[0].empty());
    CHECK(traces[0] == traces[1]);
    CHECK(traces[1] == traces[2]);
  }
  const std::string cfg = scratch().path("det1.json");
  CHECK(invoke("run --config '" + cfg + "' --out /dev/null", "DUALKIT_THREADS=0").code == 4);
  CHECK(invoke("run --config '" + cfg + "' --out /dev/null", "DUALKIT_THREADS=two").code == 4);
}

TEST_CASE("in-process config parsing")
{
  const cli::RunConfig c = cli::parse_run_config(nlohmann::json::parse(
      R"({"problem": {"id": "rof", "dim": 8}, "algorithm": "ssc", "solver": {"max_iters": 7, "tau": 0.25, "permutation": "random_each_sweep"}})"));
  CHECK(c.problem == "rof");
  CHECK(c.problem_params.at("dim") == 8);
  CHECK(c.solver.max_iters == 7);
  REQUIRE(c.tau);
  CHECK(*c.tau == 0.25);
  CHECK(c.solver.permutation == PermutationMode::random_each_sweep);
  CHECK_THROWS_AS(cli::parse_run_config(nlohmann::json::parse(R"({"algorithm": "ssc"})")), cli::UsageError);
  CHECK_THROWS_AS(cli::parse_run_config(nlohmann::json::parse(R"({"problem": "rof", "algorithm": "ssc", "extra": 1})")),
                  cli::UsageError);
  CHECK(cli::exit_code(Status::converged) == 0);
  CHECK(cli::exit_code(Status::max_iters) == 2);
  CHECK(cli::exit_code(Status::diverged) == 3);
}
