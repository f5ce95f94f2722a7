#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dualkit/admm.hpp"
#include "dualkit/error.hpp"
#include "dualkit/local_solver.hpp"
#include "dualkit/trace.hpp"
#include "json.hpp"

namespace dualkit::cli {

enum ExitCode : int { exit_converged = 0, exit_verify_failed = 1, exit_max_iters = 2, exit_diverged = 3, exit_usage = 4 };

// Bad flags, bad configs and algorithm/problem mismatches.
class UsageError : public Error {
public:
  using Error::Error;
};

struct RegistryEntry {
  std::string id;
  std::string description;
  std::string reference;
};

const std::vector<RegistryEntry>& problem_registry();
const std::vector<RegistryEntry>& algorithm_registry();

struct RunConfig {
  std::string problem;
  nlohmann::json problem_params = nlohmann::json::object();
  std::string algorithm;
  SolverConfig solver;
  // Unset means the per-algorithm default.
  std::optional<double> tau;
  std::optional<double> beta;
  LocalSolver::Kind local_solver = LocalSolver::Kind::automatic;
  DivergenceRule divergence;
  std::string output;
};

// Strict parse: unknown keys and wrongly typed values raise UsageError naming the field.
RunConfig parse_run_config(const nlohmann::json& j);
// Parse errors report line and column.
RunConfig parse_run_config_text(const std::string& text, const std::string& source = "<config>");

// Loads the problem, runs the algorithm with threads from DUALKIT_THREADS.
Trace execute(const RunConfig& cfg);
int exit_code(Status s);

int cmd_run(const std::string& config_path, const std::string& out_path, std::ostream& out, std::ostream& err);
int cmd_verify(const std::string& pair, std::uint64_t seed, int iters, double tol, const std::string& out_path,
               std::ostream& out, std::ostream& err);
int cmd_list(std::ostream& out);

int main(int argc, char** argv, std::ostream& out, std::ostream& err);

} // namespace dualkit::cli
