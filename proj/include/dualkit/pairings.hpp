#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dualkit/duality.hpp"
#include "dualkit/trace.hpp"

namespace dualkit {

struct PairInfo {
  std::string id;
  std::string description;
  std::string theorem;
  bool error_transfer = false;
};

// All registered pairs in listing order.
const std::vector<PairInfo>& pair_registry();
const PairInfo& find_pair(const std::string& id);

// u(p) = ∇F*(−Bᵗp) links the dual iterate to the primal one; the bound is (‖B‖/μ)‖p − p*‖.
struct ErrorTransfer {
  ConvexFn F;
  LinOp B;
  std::function<Vector(const TraceStep&)> primal_u;
  std::function<Vector(const TraceStep&)> dual_p;
  // Reruns the dual method for the given number of iterations.
  std::function<Trace(int)> rerun_dual;
};

struct PairRun {
  PairInfo info;
  Trace primal;
  Trace dual;
  RelationSpec spec;
  std::optional<ErrorTransfer> transfer;
};

// Builds the seeded instance of the pair and runs both methods for `iters` iterations.
PairRun run_pair(const std::string& id, std::uint64_t seed, int iters, int threads = 0);
DualizationReport verify_pair(const std::string& id, std::uint64_t seed, int iters, double tol, int threads = 0);

struct TransferReport {
  int iterations = 0;
  // bound − measured error per iterate n >= 1
  std::vector<double> slack;
  double min_slack = 0.0;
  bool pass = false;
};

// p* is the last iterate of a dual rerun with reference_iters iterations.
TransferReport check_error_transfer(const PairRun& run, int reference_iters, double tol = 1e-9);

} // namespace dualkit
