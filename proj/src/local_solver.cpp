#include "dualkit/local_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace dualkit {

using FnKind = ConvexFn::Kind;

Vector solve_psd(const Matrix& H, const Vector& r)
{
  if (H.rows() == 0) { return Vector::Zero(0); }
  Eigen::LLT<Matrix> llt(H);
  if (llt.info() == Eigen::Success) {
    const double dmax = H.diagonal().cwiseAbs().maxCoeff();
    const auto d = llt.matrixLLT().diagonal();
    if ((d.array() * d.array()).minCoeff() > 1e-12 * dmax) { return llt.solve(r); }
  }
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(H);
  cod.setThreshold(1e-12);
  return cod.solve(r);
}

Vector solve_box_qp(const Matrix& Q, const Vector& b, const Vector& lo, const Vector& hi, const Vector& y0)
{
  const Index n = b.size();
  enum State { free_, at_lo, at_hi };
  std::vector<State> state(static_cast<std::size_t>(n), free_);
  Vector y = y0.cwiseMax(lo).cwiseMin(hi);
  for (Index i = 0; i < n; ++i) {
    if (lo(i) > hi(i)) { throw SolverError("box QP: empty box"); }
    if (y(i) == lo(i)) {
      state[static_cast<std::size_t>(i)] = at_lo;
    } else if (y(i) == hi(i)) {
      state[static_cast<std::size_t>(i)] = at_hi;
    }
  }
  const double scale = 1.0 + (n > 0 ? b.cwiseAbs().maxCoeff() + Q.cwiseAbs().maxCoeff() : 0.0);
  const int cap = 20 * static_cast<int>(n) + 100;
  for (int it = 0; it < cap; ++it) {
    std::vector<Index> F;
    for (Index i = 0; i < n; ++i) {
      if (state[static_cast<std::size_t>(i)] == free_) { F.push_back(i); }
    }
    const Index nf = static_cast<Index>(F.size());
    Vector z(nf);
    if (nf > 0) {
      Matrix QFF(nf, nf);
      Vector rhs(nf);
      for (Index a = 0; a < nf; ++a) {
        double r = b(F[a]);
        for (Index k = 0; k < n; ++k) {
          if (state[static_cast<std::size_t>(k)] != free_) { r -= Q(F[a], k) * y(k); }
        }
        rhs(a) = r;
        for (Index c = 0; c < nf; ++c) { QFF(a, c) = Q(F[a], F[c]); }
      }
      z = solve_psd(QFF, rhs);
      if ((QFF * z - rhs).norm() > 1e-8 * (1.0 + rhs.norm()) * scale) {
        throw SolverError("box QP: unbounded direction on the free set");
      }
    }
    double alpha = 1.0;
    Index block = -1;
    State side = free_;
    for (Index a = 0; a < nf; ++a) {
      const Index k = F[a];
      const double d = z(a) - y(k);
      if (d < 0.0 && z(a) < lo(k)) {
        const double t = (lo(k) - y(k)) / d;
        if (t < alpha) { alpha = t; block = k; side = at_lo; }
      } else if (d > 0.0 && z(a) > hi(k)) {
        const double t = (hi(k) - y(k)) / d;
        if (t < alpha) { alpha = t; block = k; side = at_hi; }
      }
    }
    if (block < 0) {
      for (Index a = 0; a < nf; ++a) { y(F[a]) = z(a); }
      const Vector g = Q * y - b;
      const double tol = 1e-12 * scale * (1.0 + y.cwiseAbs().maxCoeff());
      Index release = -1;
      double worst = 0.0;
      for (Index i = 0; i < n; ++i) {
        const State s = state[static_cast<std::size_t>(i)];
        if (s == free_ || lo(i) == hi(i)) { continue; }
        const double viol = s == at_lo ? -g(i) : g(i);
        if (viol > tol && viol > worst) { worst = viol; release = i; }
      }
      if (release < 0) { return y; }
      state[static_cast<std::size_t>(release)] = free_;
      continue;
    }
    for (Index a = 0; a < nf; ++a) {
      const Index k = F[a];
      y(k) = std::clamp(y(k) + alpha * (z(a) - y(k)), lo(k), hi(k));
    }
    y(block) = side == at_lo ? lo(block) : hi(block);
    state[static_cast<std::size_t>(block)] = side;
  }
  throw SolverError("box QP: active-set iteration cap reached");
}

namespace {

std::optional<double> scalar_of(const Matrix& M)
{
  if (M.rows() != M.cols() || M.rows() == 0) { return std::nullopt; }
  const double s = M(0, 0);
  if ((M - s * Matrix::Identity(M.rows(), M.cols())).cwiseAbs().maxCoeff() > 1e-14 * std::abs(s)) {
    return std::nullopt;
  }
  return s;
}

// Set C with G = σ_C, when C is a box.
std::optional<ConvexSet> box_conjugate(const ConvexFn& G)
{
  switch (G.kind()) {
  case FnKind::l1: {
    const double w = G.l1_weight();
    return ConvexSet::box(Vector::Constant(G.dim(), -w), Vector::Constant(G.dim(), w));
  }
  case FnKind::support: {
    const auto& s = G.set();
    if (s.kind() == ConvexSet::Kind::box) { return s; }
    if (s.kind() == ConvexSet::Kind::linf_ball) {
      return ConvexSet::box(Vector::Constant(G.dim(), -s.radius()), Vector::Constant(G.dim(), s.radius()));
    }
    return std::nullopt;
  }
  case FnKind::scale: {
    auto inner = box_conjugate(G.parts()[0]);
    if (!inner) { return std::nullopt; }
    const double l = G.scale_factor();
    return ConvexSet::box(l * inner->lower(), l * inner->upper());
  }
  default: return std::nullopt;
  }
}

// Box B with G = χ_B.
std::optional<ConvexSet> box_indicator(const ConvexFn& G)
{
  if (G.kind() == FnKind::scale) { return box_indicator(G.parts()[0]); }
  if (G.kind() != FnKind::indicator) { return std::nullopt; }
  const auto& s = G.set();
  if (s.kind() == ConvexSet::Kind::box) { return s; }
  if (s.kind() == ConvexSet::Kind::linf_ball) {
    return ConvexSet::box(Vector::Constant(G.dim(), -s.radius()), Vector::Constant(G.dim(), s.radius()));
  }
  return std::nullopt;
}

const ConvexSet* set_indicator(const ConvexFn& G, ConvexSet::Kind kind)
{
  if (G.kind() == FnKind::scale) { return set_indicator(G.parts()[0], kind); }
  if (G.kind() == FnKind::indicator && G.set().kind() == kind) { return &G.set(); }
  return nullptr;
}

bool smooth(const CompositeTerm& t) { return is_differentiable(t.G); }

Vector solve_affine_kkt(const Composite& c, const CompositeTerm& t, const ConvexSet& set)
{
  const Matrix N = set.complement_basis();
  const Matrix C = N.transpose() * t.M;
  const Vector d = N.transpose() * (set.offset() - t.s);
  const Index n = c.H.rows();
  const Index m = C.rows();
  Matrix K = Matrix::Zero(n + m, n + m);
  K.topLeftCorner(n, n) = c.H;
  K.topRightCorner(n, m) = C.transpose();
  K.bottomLeftCorner(m, n) = C;
  Vector rhs(n + m);
  rhs << c.h, d;
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(K);
  cod.setThreshold(1e-13);
  const Vector sol = cod.solve(rhs);
  if ((K * sol - rhs).norm() > 1e-8 * (1.0 + rhs.norm())) {
    throw SolverError("local solver: affine constraint is infeasible");
  }
  return sol.head(n);
}

Vector solve_halfspace(const Composite& c, const CompositeTerm& t, const ConvexSet& set)
{
  const SpdSolver H(c.H);
  const Vector w0 = H.solve(c.h);
  const Vector a = t.M.transpose() * set.normal();
  const double excess = set.normal().dot(t.M * w0 + t.s) - set.level();
  if (excess <= 0.0) { return w0; }
  const Vector Ha = H.solve(a);
  const double curv = a.dot(Ha);
  if (!(curv > 0.0)) { throw SolverError("local solver: halfspace constraint is infeasible"); }
  return w0 - (excess / curv) * Ha;
}

// Dual route: every term is σ_{C_i}(M_i w + s_i) with C_i a box.
Vector solve_box_dual(const Composite& c, const std::vector<ConvexSet>& boxes)
{
  Index rows = 0;
  for (const auto& t : c.terms) { rows += t.M.rows(); }
  const Index n = c.H.rows();
  Matrix M(rows, n);
  Vector s(rows), lo(rows), hi(rows);
  Index o = 0;
  for (std::size_t i = 0; i < c.terms.size(); ++i) {
    const auto& t = c.terms[i];
    const Index r = t.M.rows();
    M.middleRows(o, r) = t.M;
    s.segment(o, r) = t.s;
    lo.segment(o, r) = boxes[i].lower();
    hi.segment(o, r) = boxes[i].upper();
    o += r;
  }
  const SpdSolver H(c.H);
  const Matrix HiMt = H.solve_many(M.transpose());
  const Vector Hih = H.solve(c.h);
  Matrix Q = M * HiMt;
  Q = 0.5 * (Q + Q.transpose());
  const Vector b = M * Hih + s;
  const Vector y = solve_box_qp(Q, b, lo, hi, Vector::Zero(rows));
  return Hih - HiMt * y;
}

Vector solve_box_primal(const Composite& c, const CompositeTerm& t, double sigma, const ConvexSet& box)
{
  // x = σw + s ranges over the box
  const Matrix Q = c.H / (sigma * sigma);
  const Vector b = c.H * t.s / (sigma * sigma) + c.h / sigma;
  const Vector x = solve_box_qp(Q, b, box.lower(), box.upper(), t.s);
  return (x - t.s) / sigma;
}

Vector composite_grad(const Composite& c, const Vector& w)
{
  Vector g = c.H * w - c.h;
  for (const auto& t : c.terms) { g += t.M.transpose() * grad(t.G, t.M * w + t.s); }
  return g;
}

Vector solve_newton(const Composite& c, double grad_tol, int max_iters)
{
  const Index n = c.H.rows();
  Vector w = Vector::Zero(n);
  const double tol = grad_tol * (1.0 + c.h.norm());
  for (int it = 0; it < max_iters; ++it) {
    const Vector g = composite_grad(c, w);
    const double gn = g.norm();
    Matrix Hs = c.H;
    for (const auto& t : c.terms) { Hs += t.M.transpose() * hessian(t.G, t.M * w + t.s) * t.M; }
    const Vector d = -solve_psd(Hs, g);
    if (gn <= tol) {
      const Vector polished = w + d;
      return composite_grad(c, polished).norm() < gn ? polished : w;
    }
    const double f0 = c.value(w);
    const double slope = g.dot(d);
    // near the minimizer the decrease drops below the rounding error of f
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(f0));
    double step = 1.0;
    while (step > 1e-16) {
      const Vector trial = w + step * d;
      const double f1 = c.value(trial);
      if (std::isfinite(f1) && f1 <= f0 + 1e-4 * step * slope + noise) { break; }
      step *= 0.5;
    }
    if (step <= 1e-16) {
      if (gn <= 1e-8 * (1.0 + c.h.norm())) { return w; }
      throw SolverError("local solver: Newton line search failed, gradient norm " + std::to_string(gn));
    }
    w += step * d;
  }
  const double gn = composite_grad(c, w).norm();
  if (gn <= 1e-8 * (1.0 + c.h.norm())) { return w; }
  throw SolverError("local solver: Newton reached " + std::to_string(max_iters) + " iterations, gradient norm " +
                    std::to_string(gn));
}

std::string describe_terms(const Composite& c)
{
  std::string out;
  for (const auto& t : c.terms) {
    if (!out.empty()) { out += ", "; }
    out += t.G.describe();
  }
  return out;
}

} // namespace

Vector LocalSolver::minimize(const Composite& c) const
{
  const Index n = c.H.rows();
  if (c.h.size() != n) { throw DimensionError("local solver: H and h disagree"); }
  if (!std::isfinite(c.c)) { throw SolverError("local solver: energy is +inf on the whole subspace"); }
  const bool closed = kind_ == Kind::automatic || kind_ == Kind::exact_closed_form;
  if (c.terms.empty()) {
    if (kind_ == Kind::proximal_newton) { return solve_newton(c, grad_tol, max_iters); }
    return solve_psd(c.H, c.h);
  }
  if (closed && c.terms.size() == 1) {
    const auto& t = c.terms[0];
    if (const ConvexSet* aff = set_indicator(t.G, ConvexSet::Kind::affine)) { return solve_affine_kkt(c, t, *aff); }
    if (const ConvexSet* hs = set_indicator(t.G, ConvexSet::Kind::halfspace)) { return solve_halfspace(c, t, *hs); }
    const auto alpha = scalar_of(c.H);
    const auto sigma = scalar_of(t.M);
    if (alpha && *alpha > 0.0 && sigma && *sigma != 0.0 && has_prox(t.G)) {
      const double a = *alpha, s = *sigma;
      const Vector x = prox(t.G, t.s + s * c.h / a, s * s / a);
      return (x - t.s) / s;
    }
    if (sigma && *sigma != 0.0) {
      if (auto box = box_indicator(t.G)) { return solve_box_primal(c, t, *sigma, *box); }
    }
  }
  if (closed) {
    std::vector<ConvexSet> boxes;
    for (const auto& t : c.terms) {
      auto b = box_conjugate(t.G);
      if (!b) { break; }
      boxes.push_back(*b);
    }
    if (boxes.size() == c.terms.size()) { return solve_box_dual(c, boxes); }
  }
  const bool newton = kind_ == Kind::automatic || kind_ == Kind::proximal_newton;
  if (newton && std::all_of(c.terms.begin(), c.terms.end(), smooth)) {
    return solve_newton(c, grad_tol, max_iters);
  }
  throw SolverError("local solver (" + to_string(kind_) + "): unsupported subproblem with terms [" +
                    describe_terms(c) +
                    "]; supported: quadratic, one affine/halfspace indicator, one prox-able term with "
                    "isotropic curvature, box indicators, l1 and box supports, smooth terms");
}

Vector LocalSolver::minimize(const ConvexFn& E, const Matrix& M, const Vector& s) const
{
  return minimize(flatten(E, M, s));
}

std::string to_string(LocalSolver::Kind kind)
{
  switch (kind) {
  case LocalSolver::Kind::automatic: return "automatic";
  case LocalSolver::Kind::exact_closed_form: return "exact_closed_form";
  case LocalSolver::Kind::quadratic_direct: return "quadratic_direct";
  case LocalSolver::Kind::proximal_newton: return "proximal_newton";
  }
  return "automatic";
}

LocalSolver::Kind local_solver_kind_from_string(const std::string& name)
{
  for (auto k : {LocalSolver::Kind::automatic, LocalSolver::Kind::exact_closed_form,
                 LocalSolver::Kind::quadratic_direct, LocalSolver::Kind::proximal_newton}) {
    if (to_string(k) == name) { return k; }
  }
  throw Error("unknown local solver kind '" + name + "'");
}

} // namespace dualkit
