#pragma once

#include <string>

#include "dualkit/convex.hpp"

namespace dualkit {

// min ½(Qy,y) − (b,y) subject to lo <= y <= hi (entries may be infinite).
// Primal active-set method started from the projection of y0; Q symmetric positive semidefinite
// with b in the range of Q on every free set that is visited.
Vector solve_box_qp(const Matrix& Q, const Vector& b, const Vector& lo, const Vector& hi, const Vector& y0);

// Minimizes a composite energy ½(Hw,w) − (h,w) + Σ G_i(M_i w + s_i).
//
// automatic picks, in order: linear solve (no terms), KKT solve (affine indicator),
// closed-form prox (H = αI, M = σI), exact box QP (box indicators, l1 and box supports),
// damped Newton (all terms smooth).
class LocalSolver {
public:
  enum class Kind { automatic, exact_closed_form, quadratic_direct, proximal_newton };

  LocalSolver() = default;
  explicit LocalSolver(Kind kind) : kind_(kind) {}

  Kind kind() const { return kind_; }
  double grad_tol = 1e-10;
  int max_iters = 200;

  Vector minimize(const Composite& c) const;
  // argmin_w E(M·w + s)
  Vector minimize(const ConvexFn& E, const Matrix& M, const Vector& s) const;

private:
  Kind kind_ = Kind::automatic;
};

std::string to_string(LocalSolver::Kind kind);
LocalSolver::Kind local_solver_kind_from_string(const std::string& name);

// Solves H x = r; Cholesky when H is SPD, otherwise the minimum-norm least-squares solution.
Vector solve_psd(const Matrix& H, const Vector& r);

} // namespace dualkit
