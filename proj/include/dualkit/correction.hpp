#pragma once

#include <vector>

#include "dualkit/convex.hpp"
#include "dualkit/local_solver.hpp"
#include "dualkit/trace.hpp"

namespace dualkit {

// V = Σ_j R_j V_j with injections R_j: V_j → V.
class Decomposition {
public:
  explicit Decomposition(std::vector<LinOp> injections);
  // V = ∏ V_j by consecutive index blocks of the given sizes.
  static Decomposition blocks(const std::vector<Index>& sizes);

  int size() const { return static_cast<int>(injections_.size()); }
  Index dim() const { return dim_; }
  bool is_direct_product() const { return direct_; }
  const LinOp& injection(int j) const { return injections_[static_cast<std::size_t>(j)]; }
  const Matrix& injection_matrix(int j) const { return dense_[static_cast<std::size_t>(j)]; }
  const std::vector<Index>& offsets() const { return offsets_; }
  Index block_size(int j) const { return injection(j).cols(); }
  // Σ_j R_j u_j as an operator on the stacked space.
  LinOp sum_operator() const;

  Vector block(const Vector& u, int j) const;
  Blocks split(const Vector& u) const;

private:
  std::vector<LinOp> injections_;
  std::vector<Matrix> dense_;
  std::vector<Index> offsets_;
  Index dim_ = 0;
  bool direct_ = false;
};

// w_j = argmin E(u + R_j w); u⁺ = u + τ Σ w_j.
Trace psc(const ConvexFn& E, const Decomposition& d, const LocalSolver& ls, const SolverConfig& cfg,
          const Vector& u0);

// Sequential corrections u⁽ⁿ⁺ʲ/ᴶ⁾ = u⁽ⁿ⁺⁽ʲ⁻¹⁾/ᴶ⁾ + R_j w_j; τ is not used.
Trace ssc(const ConvexFn& E, const Decomposition& d, const LocalSolver& ls, const SolverConfig& cfg,
          const Vector& u0);

// One SSC sweep gives û; then u⁺ = (1 − τ)u + τû, τ ∈ (0, 1].
Trace relaxed_ssc(const ConvexFn& E, const Decomposition& d, const LocalSolver& ls, const SolverConfig& cfg,
                  const Vector& u0);

struct ExpandedProblem {
  ConvexFn energy;  // Ẽ(ũ) = E(Σ_j R_j u_j)
  LinOp sum;        // ũ ↦ Σ_j R_j u_j
  Decomposition blocks;
};

ExpandedProblem expand_problem(const ConvexFn& E, const Decomposition& d);

// û_j = argmin over block j with the others fixed; ũ⁺ = (1 − τ)ũ + τû.
Trace block_jacobi(const ConvexFn& E, const Decomposition& blocks, const LocalSolver& ls, const SolverConfig& cfg,
                   const Vector& u0);
// In-place sweep over the blocks.
Trace block_gauss_seidel(const ConvexFn& E, const Decomposition& blocks, const LocalSolver& ls,
                         const SolverConfig& cfg, const Vector& u0);

struct ConvexityCheck {
  bool holds = true;
  // max of E(v + τΣw_j) − [(1 − τJ)E(v) + τΣE(v + w_j)] over the samples
  double worst_violation = 0.0;
};

// Samples (v, {w_j}) and tests (1 − τJ)E(v) + τΣE(v + R_j w_j) >= E(v + τΣR_j w_j).
ConvexityCheck strengthened_convexity(const ConvexFn& E, const Decomposition& d, double tau, std::uint64_t seed,
                                      int samples = 100);

} // namespace dualkit
