#include <cmath>

#include "dualkit/parallel.hpp"
#include "dualkit/projsplit.hpp"
#include "dualkit/rng.hpp"

namespace dualkit {

namespace {

// a when F is (a/2)‖u‖² plus an affine part.
std::optional<double> isotropic_curvature(const ConvexFn& F)
{
  auto q = as_quadratic(F);
  if (!q) { return std::nullopt; }
  const double a = q->A(0, 0);
  if (!(a > 0.0) || q->A != a * Matrix::Identity(q->A.rows(), q->A.cols())) { return std::nullopt; }
  return a;
}

std::vector<int> sweep_order(const SolverConfig& cfg, int J, int n)
{
  if (cfg.permutation == PermutationMode::random_each_sweep) {
    return counter_permutation(J, cfg.seed, static_cast<std::uint64_t>(n));
  }
  std::vector<int> order(static_cast<std::size_t>(J));
  for (int j = 0; j < J; ++j) { order[static_cast<std::size_t>(j)] = j; }
  return order;
}

void check_shifts(const MultiConvexProblem& P, const Vector& u0, const Blocks& v0, const char* who)
{
  P.validate();
  require_dim(u0, P.dim(), who);
  if (static_cast<int>(v0.size()) != P.size()) {
    throw DimensionError(std::string(who) + ": " + std::to_string(v0.size()) + " shifts for " +
                         std::to_string(P.size()) + " terms");
  }
  for (const auto& v : v0) { require_dim(v, P.dim(), who); }
}

// argmin F(u) + (a, u) + G_j(B_j u)
Vector tilted_step(const MultiConvexProblem& P, const LocalSolver& ls, int j, const Vector& a, int n)
{
  const auto& t = P.terms[static_cast<std::size_t>(j)];
  ConvexFn E = ConvexFn::sum({ConvexFn::tilt(P.F, a), ConvexFn::precompose(t.G, t.B)});
  const Index d = P.dim();
  try {
    return ls.minimize(E, Matrix::Identity(d, d), Vector::Zero(d));
  } catch (const SolverError& e) {
    throw SolverError("term " + std::to_string(j) + ", iteration " + std::to_string(n) + ": " + e.what());
  }
}

TraceStep split_step(const MultiConvexProblem& P, int n, int sub, const Vector& u, const Blocks& v,
                     const Stopwatch& clock)
{
  TraceStep s;
  s.iter = n;
  s.sub = sub;
  s.vars["u"] = {u};
  s.vars["v"] = v;
  s.metrics["objective"] = P.objective(u);
  s.time_s = clock.seconds();
  return s;
}

} // namespace

void MultiLinearProblem::validate() const
{
  if (A.empty()) { throw Error("multi-linear problem: no operators"); }
  if (!(alpha > 0.0)) { throw Error("multi-linear problem: alpha must be positive"); }
  require_finite(f, "multi-linear right-hand side");
  for (std::size_t j = 0; j < A.size(); ++j) {
    if (A[j].rows() != f.size() || A[j].cols() != f.size()) {
      throw DimensionError("multi-linear problem: A_" + std::to_string(j) + " is " + std::to_string(A[j].rows()) +
                           "x" + std::to_string(A[j].cols()) + ", expected " + std::to_string(f.size()));
    }
    if (!is_spd(A[j])) { throw Error("multi-linear problem: A_" + std::to_string(j) + " is not SPD"); }
  }
}

Vector MultiLinearProblem::solve() const
{
  Matrix S = alpha * Matrix::Identity(dim(), dim());
  for (const auto& a : A) { S += a; }
  return SpdSolver(S).solve(f);
}

Trace pr_linear(const MultiLinearProblem& P, const SolverConfig& cfg, const Blocks& warm)
{
  validate(cfg);
  P.validate();
  const int J = P.size();
  const Index d = P.dim();
  Blocks recent = warm.empty() ? Blocks(static_cast<std::size_t>(J), Vector::Zero(d)) : warm;
  if (static_cast<int>(recent.size()) != J) { throw DimensionError("pr_linear: warm start needs one vector per operator"); }
  for (const auto& w : recent) { require_dim(w, d, "pr_linear warm start"); }
  std::vector<SpdSolver> solvers;
  Matrix S = P.alpha * Matrix::Identity(d, d);
  for (const auto& a : P.A) {
    Matrix m = a;
    m.diagonal().array() += P.alpha;
    solvers.emplace_back(m);
    S += a;
  }
  Trace trace;
  trace.algorithm = "pr_linear";
  Stopwatch clock;
  auto step = [&](int n, int sub, const Vector& u) {
    TraceStep s;
    s.iter = n;
    s.sub = sub;
    s.vars["u"] = {u};
    s.vars["u_recent"] = recent;
    s.metrics["objective"] = 0.5 * u.dot(S * u) - P.f.dot(u);
    s.metrics["residual"] = (S * u - P.f).norm();
    s.time_s = clock.seconds();
    return s;
  };
  Vector u = recent.back();
  trace.steps.push_back(step(0, 0, u));
  for (int n = 0; n < cfg.max_iters; ++n) {
    for (int j = 0; j < J; ++j) {
      Vector rhs = P.f;
      for (int i = 0; i < J; ++i) {
        if (i != j) { rhs -= P.A[static_cast<std::size_t>(i)] * recent[static_cast<std::size_t>(i)]; }
      }
      recent[static_cast<std::size_t>(j)] = solvers[static_cast<std::size_t>(j)].solve(rhs);
      if (cfg.record_fractional && j + 1 < J) {
        trace.steps.push_back(step(n, j + 1, recent[static_cast<std::size_t>(j)]));
      }
    }
    const bool stop = stop_rule(cfg, u, recent.back());
    u = recent.back();
    trace.steps.push_back(step(n + 1, 0, u));
    if (stop) {
      trace.status = Status::converged;
      return trace;
    }
  }
  return trace;
}

DualSetup linear_dual(const MultiLinearProblem& P, const Blocks& warm)
{
  P.validate();
  const int J = P.size();
  const Index d = P.dim();
  std::vector<LinOp> ids(static_cast<std::size_t>(J), LinOp::identity(d));
  std::vector<ConvexFn> local;
  Vector p0 = Vector::Zero(d * J);
  for (int j = 0; j < J; ++j) {
    local.push_back(ConvexFn::quadratic(inverse_spd(P.A[static_cast<std::size_t>(j)]), Vector::Zero(d)));
    if (!warm.empty()) { p0.segment(d * j, d) = P.A[static_cast<std::size_t>(j)] * warm.at(static_cast<std::size_t>(j)); }
  }
  ConvexFn E = ConvexFn::sum({ConvexFn::precompose(ConvexFn::squared_distance(1.0 / P.alpha, P.f), LinOp::hcat(ids)),
                              ConvexFn::block_separable(std::move(local))});
  return DualSetup{E, Decomposition::blocks(std::vector<Index>(static_cast<std::size_t>(J), d)), p0};
}

void MultiConvexProblem::validate() const
{
  if (terms.empty()) { throw Error("multi-convex problem: no terms"); }
  if (!(F.strong_convexity() > 0.0)) { throw Error("multi-convex problem: F is not strongly convex"); }
  if (!is_differentiable(F)) { throw Error("multi-convex problem: F is not differentiable"); }
  for (std::size_t j = 0; j < terms.size(); ++j) {
    const auto& t = terms[j];
    if (t.B.cols() != F.dim() || t.B.rows() != t.G.dim()) {
      throw DimensionError("multi-convex problem: term " + std::to_string(j) + " maps " +
                           std::to_string(t.B.cols()) + " -> " + std::to_string(t.B.rows()) + " but F has dim " +
                           std::to_string(F.dim()) + " and G_" + std::to_string(j) + " has dim " +
                           std::to_string(t.G.dim()));
    }
  }
}

double MultiConvexProblem::objective(const Vector& u) const
{
  double v = eval(F, u);
  for (const auto& t : terms) { v = ext_add(v, eval(t.G, t.B.apply(u))); }
  return v;
}

ConvexFn MultiConvexProblem::objective_fn() const
{
  std::vector<ConvexFn> parts{F};
  for (const auto& t : terms) { parts.push_back(ConvexFn::precompose(t.G, t.B)); }
  return ConvexFn::sum(std::move(parts));
}

Trace generalized_pr(const MultiConvexProblem& P, const LocalSolver& ls, const SolverConfig& cfg, const Vector& u0,
                     const Blocks& v0)
{
  validate(cfg);
  check_shifts(P, u0, v0, "generalized_pr");
  const int J = P.size();
  Trace trace;
  trace.algorithm = "generalized_pr";
  Stopwatch clock;
  Vector u = u0;
  Blocks v = v0;
  trace.steps.push_back(split_step(P, 0, 0, u, v, clock));
  for (int n = 0; n < cfg.max_iters; ++n) {
    Vector cur = u;
    const auto order = sweep_order(cfg, J, n);
    for (int k = 0; k < J; ++k) {
      const int j = order[static_cast<std::size_t>(k)];
      auto& vj = v[static_cast<std::size_t>(j)];
      const Vector gprev = grad(P.F, cur);
      Vector next = tilted_step(P, ls, j, vj - gprev, n);
      vj += grad(P.F, next) - gprev;
      cur = std::move(next);
      if (cfg.record_fractional && k + 1 < J) { trace.steps.push_back(split_step(P, n, k + 1, cur, v, clock)); }
    }
    const bool stop = stop_rule(cfg, u, cur);
    u = std::move(cur);
    trace.steps.push_back(split_step(P, n + 1, 0, u, v, clock));
    if (cfg.permutation == PermutationMode::random_each_sweep) { trace.steps.back().permutation = order; }
    if (stop) {
      trace.status = Status::converged;
      return trace;
    }
  }
  return trace;
}

Trace generalized_dr(const MultiConvexProblem& P, const LocalSolver& ls, const SolverConfig& cfg, const Vector& u0,
                     const Blocks& v0)
{
  validate(cfg);
  check_shifts(P, u0, v0, "generalized_dr");
  if (!(cfg.tau > 0.0) || cfg.tau > 1.0) { throw Error("generalized_dr: tau must lie in (0, 1]"); }
  const int J = P.size();
  const auto iso = isotropic_curvature(P.F);
  Trace trace;
  trace.algorithm = "generalized_dr";
  Stopwatch clock;
  Vector u = u0;
  Blocks v = v0;
  trace.steps.push_back(split_step(P, 0, 0, u, v, clock));
  Blocks hat(static_cast<std::size_t>(J)), vhat(static_cast<std::size_t>(J));
  for (int n = 0; n < cfg.max_iters; ++n) {
    Vector prev = u;
    const auto order = sweep_order(cfg, J, n);
    for (int k = 0; k < J; ++k) {
      const int j = order[static_cast<std::size_t>(k)];
      const auto jj = static_cast<std::size_t>(j);
      const Vector gprev = grad(P.F, prev);
      hat[jj] = tilted_step(P, ls, j, v[jj] - gprev, n);
      const Vector delta = grad(P.F, hat[jj]) - gprev;
      vhat[jj] = v[jj] + delta;
      v[jj] += cfg.tau * delta;
      prev = hat[jj];
    }
    Vector next;
    if (iso) {
      next = (1.0 - cfg.tau) * u + cfg.tau * prev;
    } else {
      Vector s = Vector::Zero(P.dim());
      for (const auto& vj : v) { s += vj; }
      next = grad_conjugate(P.F, s);
    }
    const bool stop = stop_rule(cfg, u, next);
    u = std::move(next);
    trace.steps.push_back(split_step(P, n + 1, 0, u, v, clock));
    trace.steps.back().vars["u_hat"] = hat;
    trace.steps.back().vars["v_hat"] = vhat;
    if (cfg.permutation == PermutationMode::random_each_sweep) { trace.steps.back().permutation = order; }
    if (stop) {
      trace.status = Status::converged;
      return trace;
    }
  }
  return trace;
}

Trace parallel_dr(const MultiConvexProblem& P, const LocalSolver& ls, const SolverConfig& cfg, const Vector& u0,
                  const Blocks& v0)
{
  validate(cfg);
  check_shifts(P, u0, v0, "parallel_dr");
  const int J = P.size();
  const int threads = resolve_threads(cfg.threads);
  const auto iso = isotropic_curvature(P.F);
  Trace trace;
  trace.algorithm = "parallel_dr";
  Stopwatch clock;
  Vector u = u0;
  Blocks v = v0;
  trace.steps.push_back(split_step(P, 0, 0, u, v, clock));
  Blocks parts(static_cast<std::size_t>(J));
  for (int n = 0; n < cfg.max_iters; ++n) {
    const Vector gu = grad(P.F, u);
    for_each_block(J, threads, [&](int j) {
      const auto jj = static_cast<std::size_t>(j);
      parts[jj] = tilted_step(P, ls, j, v[jj] - gu, n);
      v[jj] += cfg.tau * (grad(P.F, parts[jj]) - gu);
    });
    Vector next;
    if (iso) {
      next = (1.0 - cfg.tau * J) * u;
      for (const auto& p : parts) { next += cfg.tau * p; }
    } else {
      Vector s = Vector::Zero(P.dim());
      for (const auto& vj : v) { s += vj; }
      next = grad_conjugate(P.F, s);
    }
    const bool stop = stop_rule(cfg, u, next);
    u = std::move(next);
    trace.steps.push_back(split_step(P, n + 1, 0, u, v, clock));
    trace.steps.back().vars["u_parts"] = parts;
    if (stop) {
      trace.status = Status::converged;
      return trace;
    }
  }
  return trace;
}

Trace pr_differentiable(const MultiConvexProblem& P, const LocalSolver& ls, const SolverConfig& cfg,
                        const Blocks& warm)
{
  validate(cfg);
  P.validate();
  const int J = P.size();
  if (static_cast<int>(warm.size()) != J) {
    throw DimensionError("pr_differentiable: warm start needs one vector per term");
  }
  for (const auto& t : P.terms) {
    if (!is_differentiable(t.G)) { throw Error("pr_differentiable: term " + t.G.describe() + " is not differentiable"); }
  }
  auto shift = [&](int i, const Vector& ui) {
    const auto& t = P.terms[static_cast<std::size_t>(i)];
    return Vector(-t.B.apply_adjoint(grad(t.G, t.B.apply(ui))));
  };
  Blocks recent = warm;
  Blocks v(static_cast<std::size_t>(J));
  for (int i = 0; i < J; ++i) {
    require_dim(recent[static_cast<std::size_t>(i)], P.dim(), "pr_differentiable warm start");
    v[static_cast<std::size_t>(i)] = shift(i, recent[static_cast<std::size_t>(i)]);
  }
  Trace trace;
  trace.algorithm = "pr_differentiable";
  Stopwatch clock;
  Vector u = recent.back();
  trace.steps.push_back(split_step(P, 0, 0, u, v, clock));
  for (int n = 0; n < cfg.max_iters; ++n) {
    for (int j = 0; j < J; ++j) {
      Vector others = Vector::Zero(P.dim());
      for (int i = 0; i < J; ++i) {
        if (i != j) { others += v[static_cast<std::size_t>(i)]; }
      }
      recent[static_cast<std::size_t>(j)] = tilted_step(P, ls, j, -others, n);
      v[static_cast<std::size_t>(j)] = shift(j, recent[static_cast<std::size_t>(j)]);
      if (cfg.record_fractional && j + 1 < J) {
        trace.steps.push_back(split_step(P, n, j + 1, recent[static_cast<std::size_t>(j)], v, clock));
      }
    }
    const bool stop = stop_rule(cfg, u, recent.back());
    u = recent.back();
    trace.steps.push_back(split_step(P, n + 1, 0, u, v, clock));
    if (stop) {
      trace.status = Status::converged;
      return trace;
    }
  }
  return trace;
}

DualSetup convex_dual(const MultiConvexProblem& P, const Blocks& p0)
{
  P.validate();
  const int J = P.size();
  std::vector<LinOp> adj;
  std::vector<ConvexFn> local;
  std::vector<Index> sizes;
  Index total = 0;
  for (const auto& t : P.terms) {
    adj.push_back(t.B.adjoint());
    local.push_back(conjugate(t.G));
    sizes.push_back(t.G.dim());
    total += t.G.dim();
  }
  LinOp minus_sum = LinOp::compose(LinOp::scaling(P.dim(), -1.0), LinOp::hcat(std::move(adj)));
  ConvexFn E = ConvexFn::sum({ConvexFn::precompose(conjugate(P.F), minus_sum),
                              ConvexFn::block_separable(std::move(local))});
  Vector p = Vector::Zero(total);
  if (!p0.empty()) {
    if (static_cast<int>(p0.size()) != J) { throw DimensionError("convex_dual: one start block per term"); }
    Index o = 0;
    for (int j = 0; j < J; ++j) {
      require_dim(p0[static_cast<std::size_t>(j)], sizes[static_cast<std::size_t>(j)], "convex_dual start");
      p.segment(o, sizes[static_cast<std::size_t>(j)]) = p0[static_cast<std::size_t>(j)];
      o += sizes[static_cast<std::size_t>(j)];
    }
  }
  return DualSetup{E, Decomposition::blocks(sizes), p};
}

SplittingStart matched_start(const MultiConvexProblem& P, const Blocks& p0)
{
  P.validate();
  if (static_cast<int>(p0.size()) != P.size()) { throw DimensionError("matched_start: one block per term"); }
  SplittingStart s;
  Vector total = Vector::Zero(P.dim());
  for (int j = 0; j < P.size(); ++j) {
    Vector vj = -P.terms[static_cast<std::size_t>(j)].B.apply_adjoint(p0[static_cast<std::size_t>(j)]);
    total += vj;
    s.v0.push_back(std::move(vj));
  }
  s.u0 = grad_conjugate(P.F, total);
  return s;
}

} // namespace dualkit
