#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dualkit/linops.hpp"
#include "json.hpp"

namespace dualkit {

using Blocks = std::vector<Vector>;

// One recorded state. sub = 0 is the full iterate n; 0 < sub < J is the fractional iterate n + sub/J.
struct TraceStep {
  int iter = 0;
  int sub = 0;
  std::map<std::string, Blocks> vars;
  std::map<std::string, double> metrics;
  std::vector<int> permutation;
  double time_s = 0.0;

  bool has(const std::string& name) const { return vars.count(name) != 0; }
  const Blocks& blocks(const std::string& name) const;
  const Vector& var(const std::string& name, std::size_t block = 0) const;
  // All blocks of a variable stacked into one vector.
  Vector stacked(const std::string& name) const;
};

enum class Status { converged, max_iters, diverged };
std::string to_string(Status s);

struct Trace {
  std::string algorithm;
  std::vector<TraceStep> steps;
  Status status = Status::max_iters;
  std::vector<std::string> warnings;

  // Full iterates only (sub = 0), in order.
  std::vector<const TraceStep*> iterates() const;
  const TraceStep& iterate(int n) const;
  const TraceStep& last() const;
  int iterations() const;
};

enum class PermutationMode { fixed, random_each_sweep };

struct SolverConfig {
  double tau = 1.0;
  int max_iters = 100;
  // ‖x⁽ⁿ⁺¹⁾ − x⁽ⁿ⁾‖ <= stop_tol·(1 + ‖x⁽ⁿ⁾‖) stops the run; 0 disables the rule.
  double stop_tol = 0.0;
  std::uint64_t seed = 0;
  PermutationMode permutation = PermutationMode::fixed;
  int threads = 0;
  // Allows PSC steps with τ > 1/J after a sampled strengthened-convexity check.
  bool allow_large_step = false;
  bool record_fractional = true;
};

void validate(const SolverConfig& cfg);

// Wall-clock stamps for trace steps.
class Stopwatch {
public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const
  {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_;
};

bool stop_rule(const SolverConfig& cfg, const Vector& prev, const Vector& next);

nlohmann::json to_json(const Vector& v);
nlohmann::json to_json(const TraceStep& step, bool include_time = true);
// One JSON document per line; the time_s field is omitted when include_time is false.
std::string to_jsonl(const Trace& trace, bool include_time = true);
void write_jsonl(const Trace& trace, const std::string& path);

} // namespace dualkit
