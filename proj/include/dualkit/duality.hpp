#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dualkit/convex.hpp"
#include "dualkit/trace.hpp"
#include "json.hpp"

namespace dualkit {

// min_u F(u) + G(Bu)
class PrimalDualProblem {
public:
  PrimalDualProblem(ConvexFn F, ConvexFn G, LinOp B);

  const ConvexFn& F() const { return F_; }
  const ConvexFn& G() const { return G_; }
  const LinOp& B() const { return B_; }

  // Throws unless F is finite at the witness point.
  void check_proper(const Vector& witness) const;

private:
  ConvexFn F_, G_;
  LinOp B_;
};

// min_p G*(p) + F*(−Bᵗp), encoded as F' = G*, G' = F*, B' = −Bᵗ.
PrimalDualProblem dual_problem(const PrimalDualProblem& P);

// u ↦ F(u) + G(Bu) as one function.
ConvexFn objective(const PrimalDualProblem& P);
double primal_value(const PrimalDualProblem& P, const Vector& u);

// ∇F*(−Bᵗp)
Vector recover_primal(const PrimalDualProblem& P, const Vector& p);

// [F(u) + G(Bu)] − [−F*(−Bᵗp) − G*(p)]
double duality_gap(const PrimalDualProblem& P, const Vector& u, const Vector& p);

// (‖B‖/μ)·‖p − p*‖
double error_transfer_bound(const PrimalDualProblem& P, const Vector& p, const Vector& p_star, double mu);

// A named identity between matched steps of a primal run and a dual run.
struct Relation {
  std::string name;
  std::function<double(const TraceStep& primal, const TraceStep& dual)> residual;
};

struct RelationSpec {
  std::string theorem_id;
  // Checked at every matched step with n >= 1.
  std::vector<Relation> relations;
  // Checked at n = 0; empty means the relations themselves.
  std::vector<Relation> hypothesis;
  double hypothesis_tol = 1e-10;
  // Also compare fractional steps (n, j) present in both traces.
  bool fractional = false;
};

struct DualizationReport {
  std::string theorem_id;
  int iterations = 0;
  // One map per compared step: relation name to residual; "iter" and "sub" identify the step.
  std::vector<std::map<std::string, double>> residuals;
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;

  nlohmann::json to_json() const;
};

DualizationReport verify_dualization(const Trace& primal, const Trace& dual, const RelationSpec& spec,
                                     double tol);

} // namespace dualkit
