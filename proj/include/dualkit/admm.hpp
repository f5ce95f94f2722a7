#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dualkit/convex.hpp"
#include "dualkit/correction.hpp"
#include "dualkit/local_solver.hpp"
#include "dualkit/projsplit.hpp"
#include "dualkit/trace.hpp"
#include "json.hpp"

namespace dualkit {

struct AdmmBlock {
  ConvexFn F;
  LinOp B;
};

// min Σ_j F_j(u_j) subject to Σ_j B_j u_j = g, with penalty β in the augmented Lagrangian.
struct ConstrainedProblem {
  std::vector<AdmmBlock> blocks;
  Vector g;
  double beta = 1.0;

  void validate() const;
  int size() const { return static_cast<int>(blocks.size()); }
  Index block_dim(int j) const { return blocks[static_cast<std::size_t>(j)].F.dim(); }
  // ‖Σ_j B_j u_j − g‖
  double constraint_residual(const Blocks& u) const;
  double objective(const Blocks& u) const;
};

// min Σ_j F_j(w_j) + (β/2)‖Σ_j B_j w_j − g‖²; the quadratic last block is implicit.
struct SharingProblem {
  std::vector<AdmmBlock> terms;
  Vector g;
  double beta = 1.0;

  void validate() const;
  int size() const { return static_cast<int>(terms.size()); }
  double objective(const Blocks& w) const;
};

// The sharing objective as one energy on the stacked w, with its block decomposition.
struct SharingEnergy {
  ConvexFn energy;
  Decomposition decomposition;
};
SharingEnergy sharing_energy(const SharingProblem& P);

// Dual of the sharing problem: F(p) = (1/2β)‖p‖² + (g, p), G_j = F_j*, B'_j = −B_jᵗ.
MultiConvexProblem sharing_dual(const SharingProblem& P);

// A run aborts as diverged when its monitored residual (constraint, or consensus for the
// dualization-based methods) exceeds `limit` or grows for `window` consecutive iterations
// (0 disables the growth rule).
struct DivergenceRule {
  double limit = 1e6;
  int window = 200;
};

// Traces carry u (one block per j), lambda, and the metrics constraint and objective.
Trace admm_plain(const ConstrainedProblem& P, const LocalSolver& ls, const SolverConfig& cfg, const Blocks& u0,
                 const Vector& lambda0, const DivergenceRule& rule = {});
// Forward sweep 1..J, backward sweep J..1, then the multiplier step.
Trace admm_symmetrized(const ConstrainedProblem& P, const LocalSolver& ls, const SolverConfig& cfg,
                       const Blocks& u0, const Vector& lambda0, const DivergenceRule& rule = {});
// Sweep order from counter_permutation(J, seed, n); each iterate stores its permutation.
Trace admm_random_permuted(const ConstrainedProblem& P, const LocalSolver& ls, const SolverConfig& cfg,
                           const Blocks& u0, const Vector& lambda0, const DivergenceRule& rule = {});

// Two blocks with B_2 = −I: u1, u2, then λ += β(B_1u_1 − u_2 − g). Vars u1, u2, lambda.
Trace admm_two_block(const ConstrainedProblem& P, const LocalSolver& ls, const SolverConfig& cfg,
                     const Vector& u1_0, const Vector& u2_0, const Vector& lambda0, const DivergenceRule& rule = {});
// DR on F_1*(−B_1ᵗp) + F_2*(p) + (g, p). Vars p, q, r.
Trace dr_dual_two_block(const ConstrainedProblem& P, const LocalSolver& ls, const SolverConfig& cfg,
                        const Vector& p0, const Vector& q0, const Vector& r0);

// One-block augmented Lagrangian method: admm_plain with J = 1.
Trace alm(const ConstrainedProblem& P, const LocalSolver& ls, const SolverConfig& cfg, const Vector& u0,
          const Vector& lambda0, const DivergenceRule& rule = {});
// p⁺ = argmin E(p) + (1/2β)‖p − p⁽ⁿ⁾‖². Var p, metric objective.
Trace proximal_point(const ConvexFn& E, double beta, const LocalSolver& ls, const SolverConfig& cfg,
                     const Vector& p0);
// E(p) = F_1*(−B_1ᵗp) + (g, p) for a one-block problem.
ConvexFn alm_dual_energy(const ConstrainedProblem& P);

// Hat-multiplier sweep with relaxed v and λ. Vars u_hat, v, lambda, lambda_hat; τ ∈ (0, 1].
// Metrics: coupling ‖Σv − g − λ/β‖ (kept constant by the updates, so start with it at zero)
// and consensus (Σ_j‖B_jû_j − v_j‖²)^½.
Trace admm_dualization_based(const SharingProblem& P, const LocalSolver& ls, const SolverConfig& cfg,
                             const Blocks& v0, const Vector& lambda0, const DivergenceRule& rule = {});
// Independent u_j solves against λ⁽ⁿ⁾. Vars u, v, lambda, lambda_parts (λ + β(B_ju_j − v_j)).
Trace admm_dualization_parallel(const SharingProblem& P, const LocalSolver& ls, const SolverConfig& cfg,
                                const Blocks& v0, const Vector& lambda0, const DivergenceRule& rule = {});

// Default relaxation for the dualization-based methods.
inline constexpr double kDualizationTau = 0.5;

// Quadratic data of a constrained problem with F_j = ½(A_j u, u) − (f_j, u).
struct QuadraticSaddle {
  Matrix A_beta; // diag(A_j) + βB̃ᵗB̃
  Matrix B;      // [B_1 ... B_J]
  Vector f_beta; // f_j + βB_jᵗg
  std::vector<Index> offsets;
};
QuadraticSaddle assemble_saddle(const ConstrainedProblem& P);

struct UzawaSmootherPair {
  std::string name;
  Matrix R_V;
  Matrix R_W;
  bool symmetric_V = false;
  bool symmetric_W = true;
};

UzawaSmootherPair plain_smoother(const QuadraticSaddle& S, double beta);
UzawaSmootherPair symmetrized_smoother(const QuadraticSaddle& S, double beta);
// Average of the permuted Gauss-Seidel smoothers over all J! orders; J <= 4.
UzawaSmootherPair random_smoother(const QuadraticSaddle& S, double beta);

// u⁺ = u + R_V(f̃ − Ãu − B̃ᵗλ), λ⁺ = λ + R_W(B̃u⁺ − g)
void uzawa_step(const QuadraticSaddle& S, const UzawaSmootherPair& R, const Vector& g, Vector& u, Vector& lambda);

struct UzawaReport {
  std::string smoother;
  bool symmetric = false;
  double symmetry_defect = 0.0;
  double min_eig_primal = 0.0; // λ_min(sym(R_V⁻¹) − Ã_β)
  double min_eig_dual = 0.0;   // λ_min(R_W⁻¹ − B̃Ã_β⁻¹B̃ᵗ)
  bool primal_condition = false;
  bool dual_condition = false;
  // Both conditions and a symmetric R_V; otherwise the report carries "no guarantee".
  bool guaranteed = false;

  nlohmann::json to_json() const;
};

UzawaReport uzawa_check_quadratic(const ConstrainedProblem& P, const UzawaSmootherPair& R, double tol = 1e-10,
                                  std::uint64_t seed = 0);

} // namespace dualkit
