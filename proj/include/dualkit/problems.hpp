#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dualkit/admm.hpp"
#include "dualkit/correction.hpp"
#include "dualkit/duality.hpp"
#include "dualkit/projsplit.hpp"
#include "json.hpp"

namespace dualkit {

// 1-D total-variation denoising: (α/2)‖u − f‖² + ‖Du‖₁.
struct RofInstance {
  Vector f;
  double alpha = 1.0;

  void validate() const;
  Index dim() const { return f.size(); }
};

// F = (α/2)‖· − f‖², G = ‖·‖₁, B = D. The dual is (1/2α)‖Dᵗp‖² − (Df, p) on ‖p‖∞ ≤ 1.
PrimalDualProblem rof_primal_dual(const RofInstance& inst);
// Dual-side split of R^d into coordinates [0, d1) and [d1, d).
Decomposition rof_decomposition(const RofInstance& inst, Index d1);
// Primal splitting form: G_j = ‖·‖₁ on the rows of D in block j.
MultiConvexProblem rof_splitting(const RofInstance& inst, Index d1);
// u = f − Dᵗp/α
Vector rof_recover(const RofInstance& inst, const Vector& p);
// Piecewise-constant signal plus Gaussian noise.
RofInstance random_rof(std::uint64_t seed, Index d, double alpha);

// Multinomial logistic regression with 1-based labels.
struct LogisticInstance {
  std::vector<Vector> x;
  std::vector<int> y;
  int k = 2;
  double alpha = 1.0;

  void validate() const;
  int size() const { return static_cast<int>(x.size()); }
  Index features() const { return x.empty() ? 0 : x.front().size(); }
  // (d + 1)k
  Index dim() const { return (features() + 1) * k; }
};

// Rows of numeric features followed by an integer label in 1..k. k = 0 takes the largest label.
LogisticInstance parse_logistic_csv(std::string_view text, double alpha, bool header = false, int k = 0,
                                    std::string_view source = "<memory>");
LogisticInstance logistic_from_csv(const std::string& path, double alpha, bool header = false, int k = 0);

// X_j = I_k ⊗ [x_j; 1] as a (d+1)k × k operator.
LinOp logistic_design(const LogisticInstance& inst, int j);
// x̂ = Σ_j X_j e_{y_j}
Vector logistic_target(const LogisticInstance& inst);
// N-scaled problem: F(θ) = (Nα/2)‖θ‖² − x̂ᵗθ, G_j = LSE_k, B_j = X_jᵗ.
MultiConvexProblem logistic_problem(const LogisticInstance& inst);
// Σ_j LSE_k(X_jᵗθ) − x̂ᵗθ + (Nα/2)‖θ‖²
double logistic_objective(const LogisticInstance& inst, const Vector& theta);
Vector logistic_gradient(const LogisticInstance& inst, const Vector& theta);
// Uniform 1/k per sample, a point of the dual domain.
Blocks logistic_dual_start(const LogisticInstance& inst);
LogisticInstance random_logistic(std::uint64_t seed, int N, Index d, int k, double alpha);

// QᵗΛQ with a log-spaced spectrum in [1, cond]; cond = 1 gives the identity exactly.
Matrix random_spd(std::uint64_t seed, Index dim, double cond);

MultiLinearProblem random_multilinear(std::uint64_t seed, Index dim, int J, double cond, double alpha = 1.0);
// Quadratic blocks F_j = ½(A_ju,u) − (f_j,u) of size block_dim, constraints in R^w with a feasible g.
ConstrainedProblem random_constrained(std::uint64_t seed, int J, Index block_dim, Index w, double cond,
                                      double beta = 1.0);
SharingProblem random_sharing(std::uint64_t seed, int J, Index block_dim, Index w, double cond, double beta = 1.0);
// Two blocks with B_2 = −I and quadratic F_1, F_2.
ConstrainedProblem random_two_block(std::uint64_t seed, Index d1, Index w, double cond, double beta = 1.0);
// Quadratic F = (α/2)‖u − c‖² with quadratic G_j ∘ B_j terms.
MultiConvexProblem random_multiconvex(std::uint64_t seed, Index dim, int J, double alpha = 1.0);
// Boxes and halfspaces sharing a common point.
PocsProblem random_pocs(std::uint64_t seed, Index dim, int J);
// Affine subspaces through a common point.
PocsProblem random_affine_pocs(std::uint64_t seed, Index dim, int J);

// Two lines in the plane meeting at (1, 1), started from f = (3, 2).
PocsProblem two_lines();
// A box and a halfspace that cuts it.
PocsProblem box_halfspace(std::uint64_t seed, Index dim);

// Reconstruction of the three-block example of Chen, He, Ye and Yuan: F_j = 0 on R,
// B_j = a_j with a_1 = (1,1,1), a_2 = (1,1,2), a_3 = (1,2,2), g = 0, β = 1.
ConstrainedProblem chyy_witness();
// The same columns as a sharing problem.
SharingProblem chyy_sharing();

nlohmann::json to_json(const ConvexSet& K);
ConvexSet convex_set_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PocsProblem& P);
PocsProblem pocs_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MultiLinearProblem& P);
MultiLinearProblem multilinear_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RofInstance& inst);
RofInstance rof_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LogisticInstance& inst);
LogisticInstance logistic_from_json(const nlohmann::json& j);
// Quadratic blocks only.
nlohmann::json to_json(const ConstrainedProblem& P);
ConstrainedProblem constrained_from_json(const nlohmann::json& j);

Vector vector_from_json(const nlohmann::json& j, std::string_view what);
Matrix matrix_from_json(const nlohmann::json& j, std::string_view what);
nlohmann::json to_json(const Matrix& m);

} // namespace dualkit
