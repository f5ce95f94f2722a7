#pragma once

#include <optional>
#include <vector>

#include "dualkit/convex.hpp"
#include "dualkit/correction.hpp"
#include "dualkit/local_solver.hpp"
#include "dualkit/trace.hpp"

namespace dualkit {

// min ½‖u − f‖² over the intersection of the sets.
struct PocsProblem {
  Vector f;
  std::vector<ConvexSet> sets;
  // ū in every set; only the affine dual needs it
  std::optional<Vector> common_point;

  void validate() const;
  bool all_affine() const;
  Index dim() const { return f.size(); }
};

// u⁰ = f; u⁽ⁿ⁺ʲ/ᴶ⁾ = proj_{K_j} u⁽ⁿ⁺⁽ʲ⁻¹⁾/ᴶ⁾.
Trace von_neumann(const PocsProblem& P, const SolverConfig& cfg);
// Row-action sweeps u ← u + ((f_i − a_i·u)/‖a_i‖²)a_i, starting from u0 (zero when omitted).
Trace kaczmarz(const Matrix& A, const Vector& f, const SolverConfig& cfg, std::optional<Vector> u0 = std::nullopt);
// Corrected projections with q⁰ = 0; the trace carries u and the J blocks of q.
Trace dykstra(const PocsProblem& P, const SolverConfig& cfg);
// u⁺ = (1 − τJ)u + τΣ proj_{K_j} u
Trace parallel_von_neumann(const PocsProblem& P, const SolverConfig& cfg);
// u_j = proj_{K_j}(u + q_j), q_j⁺ = q_j + τ(u − u_j), u⁺ = (1 − τJ)u + τΣu_j
Trace parallel_dykstra(const PocsProblem& P, const SolverConfig& cfg);

// An energy with a decomposition and the starting point of a dual run.
struct DualSetup {
  ConvexFn energy;
  Decomposition decomposition;
  Vector p0;
};

// ½‖p − (f − ū)‖² over Σ_j M_j^⊥; u = f − p. Needs affine sets and ū.
DualSetup affine_pocs_dual(const PocsProblem& P);
// ½‖Σp_j − f‖² + Σ σ_{K_j}(p_j) over V^J; u = f − Σp_j and q = p.
DualSetup dykstra_dual(const PocsProblem& P);

// (ΣA_j + αI)u = f
struct MultiLinearProblem {
  std::vector<Matrix> A;
  double alpha = 1.0;
  Vector f;

  void validate() const;
  Index dim() const { return f.size(); }
  int size() const { return static_cast<int>(A.size()); }
  Vector solve() const;
};

// Warm start u⁽⁻¹⁺ʲ/ᴶ⁾ per j; zeros when empty.
Trace pr_linear(const MultiLinearProblem& P, const SolverConfig& cfg, const Blocks& warm = {});

// (1/2α)‖Σp_j − f‖² + ½Σ(A_j⁻¹p_j, p_j) over V^J; u = (f − Σp_j)/α.
DualSetup linear_dual(const MultiLinearProblem& P, const Blocks& warm = {});

struct ConvexTerm {
  ConvexFn G;
  LinOp B;
};

// min F(u) + Σ_j G_j(B_j u) with F strongly convex and smooth.
struct MultiConvexProblem {
  ConvexFn F;
  std::vector<ConvexTerm> terms;

  void validate() const;
  Index dim() const { return F.dim(); }
  int size() const { return static_cast<int>(terms.size()); }
  double objective(const Vector& u) const;
  // F ∘ ... as one function of u
  ConvexFn objective_fn() const;
};

// Subproblem argmin D_F(u; u⁽ⁿ⁺⁽ʲ⁻¹⁾/ᴶ⁾) + (v_j, u) + G_j(B_j u), then v_j += ∇F(new) − ∇F(old).
Trace generalized_pr(const MultiConvexProblem& P, const LocalSolver& ls, const SolverConfig& cfg, const Vector& u0,
                     const Blocks& v0);
// Sweep of hat iterates from u⁽ⁿ⁾, relaxed shifts, u⁺ = ∇F*(Σv⁺).
// F = (α/2)‖·‖² + linear uses u⁺ = (1 − τ)u + τû⁽ⁿ⁺¹,ᴶ⁾.
Trace generalized_dr(const MultiConvexProblem& P, const LocalSolver& ls, const SolverConfig& cfg, const Vector& u0,
                     const Blocks& v0);
// Independent subproblems from u⁽ⁿ⁾; F = (α/2)‖·‖² + linear uses u⁺ = (1 − τJ)u + τΣu_j.
Trace parallel_dr(const MultiConvexProblem& P, const LocalSolver& ls, const SolverConfig& cfg, const Vector& u0,
                  const Blocks& v0);
// Generalized PR for differentiable G_j without the shift sequence: the shift of block i is
// −B_iᵗ∇G_i(B_i u_i) at its most recent iterate u_i, seeded by the warm start.
Trace pr_differentiable(const MultiConvexProblem& P, const LocalSolver& ls, const SolverConfig& cfg,
                        const Blocks& warm);

// F*(−ΣB_jᵗp_j) + ΣG_j*(p_j) over ∏W_j.
DualSetup convex_dual(const MultiConvexProblem& P, const Blocks& p0 = {});
// Matched start: u⁰ = ∇F*(−ΣB_jᵗp_j⁰), v_j⁰ = −B_jᵗp_j⁰.
struct SplittingStart {
  Vector u0;
  Blocks v0;
};
SplittingStart matched_start(const MultiConvexProblem& P, const Blocks& p0);

} // namespace dualkit
