#include <cmath>

#include "dualkit/parallel.hpp"
#include "dualkit/projsplit.hpp"

namespace dualkit {

namespace {

double infeasibility(const PocsProblem& P, const Vector& u)
{
  double worst = 0.0;
  for (const auto& K : P.sets) { worst = std::max(worst, (u - K.project(u)).norm()); }
  return worst;
}

TraceStep pocs_step(const PocsProblem& P, int n, int sub, const Vector& u, const Stopwatch& clock)
{
  TraceStep s;
  s.iter = n;
  s.sub = sub;
  s.vars["u"] = {u};
  s.metrics["objective"] = 0.5 * (u - P.f).squaredNorm();
  s.metrics["infeasibility"] = infeasibility(P, u);
  s.time_s = clock.seconds();
  return s;
}

TraceStep pocs_step(const PocsProblem& P, int n, int sub, const Vector& u, const Blocks& q, const Stopwatch& clock)
{
  TraceStep s = pocs_step(P, n, sub, u, clock);
  s.vars["q"] = q;
  return s;
}

void require_sets(const PocsProblem& P, const char* who)
{
  P.validate();
  if (P.sets.empty()) { throw Error(std::string(who) + ": no sets given"); }
}

} // namespace

void PocsProblem::validate() const
{
  require_finite(f, "POCS point f");
  for (std::size_t j = 0; j < sets.size(); ++j) {
    if (sets[j].dim() != f.size()) {
      throw DimensionError("POCS set " + std::to_string(j) + " has dim " + std::to_string(sets[j].dim()) +
                           " but f has dim " + std::to_string(f.size()));
    }
  }
  if (common_point) {
    require_dim(*common_point, f.size(), "POCS common point");
    for (std::size_t j = 0; j < sets.size(); ++j) {
      if (!sets[j].contains(*common_point, 1e-10)) {
        throw Error("POCS common point is not in set " + std::to_string(j) + " (" + sets[j].describe() + ")");
      }
    }
  }
}

bool PocsProblem::all_affine() const
{
  for (const auto& K : sets) {
    if (K.kind() != ConvexSet::Kind::affine) { return false; }
  }
  return true;
}

Trace von_neumann(const PocsProblem& P, const SolverConfig& cfg)
{
  validate(cfg);
  require_sets(P, "von_neumann");
  const int J = static_cast<int>(P.sets.size());
  Trace trace;
  trace.algorithm = "von_neumann";
  Stopwatch clock;
  Vector u = P.f;
  trace.steps.push_back(pocs_step(P, 0, 0, u, clock));
  for (int n = 0; n < cfg.max_iters; ++n) {
    Vector cur = u;
    for (int j = 0; j < J; ++j) {
      cur = P.sets[static_cast<std::size_t>(j)].project(cur);
      if (cfg.record_fractional && j + 1 < J) { trace.steps.push_back(pocs_step(P, n, j + 1, cur, clock)); }
    }
    const bool stop = stop_rule(cfg, u, cur);
    u = std::move(cur);
    trace.steps.push_back(pocs_step(P, n + 1, 0, u, clock));
    if (stop) {
      trace.status = Status::converged;
      return trace;
    }
  }
  return trace;
}

Trace kaczmarz(const Matrix& A, const Vector& f, const SolverConfig& cfg, std::optional<Vector> u0)
{
  validate(cfg);
  if (f.size() != A.rows()) {
    throw DimensionError("kaczmarz: A has " + std::to_string(A.rows()) + " rows but f has " +
                         std::to_string(f.size()) + " entries");
  }
  std::vector<double> norms(static_cast<std::size_t>(A.rows()));
  for (Index i = 0; i < A.rows(); ++i) {
    norms[static_cast<std::size_t>(i)] = A.row(i).squaredNorm();
    if (norms[static_cast<std::size_t>(i)] == 0.0) {
      throw Error("kaczmarz: row " + std::to_string(i) + " of A is zero");
    }
  }
  Vector u = u0 ? *u0 : Vector::Zero(A.cols());
  require_dim(u, A.cols(), "kaczmarz start");
  Trace trace;
  trace.algorithm = "kaczmarz";
  Stopwatch clock;
  auto step = [&](int n, const Vector& x) {
    TraceStep s;
    s.iter = n;
    s.vars["u"] = {x};
    s.metrics["residual"] = (A * x - f).norm();
    s.time_s = clock.seconds();
    return s;
  };
  trace.steps.push_back(step(0, u));
  for (int n = 0; n < cfg.max_iters; ++n) {
    Vector cur = u;
    for (Index i = 0; i < A.rows(); ++i) {
      const double r = (f(i) - A.row(i).dot(cur)) / norms[static_cast<std::size_t>(i)];
      cur += r * A.row(i).transpose();
    }
    const bool stop = stop_rule(cfg, u, cur);
    u = std::move(cur);
    trace.steps.push_back(step(n + 1, u));
    if (stop) {
      trace.status = Status::converged;
      return trace;
    }
  }
  return trace;
}

Trace dykstra(const PocsProblem& P, const SolverConfig& cfg)
{
  validate(cfg);
  require_sets(P, "dykstra");
  const int J = static_cast<int>(P.sets.size());
  Trace trace;
  trace.algorithm = "dykstra";
  Stopwatch clock;
  Vector u = P.f;
  Blocks q(static_cast<std::size_t>(J), Vector::Zero(P.dim()));
  trace.steps.push_back(pocs_step(P, 0, 0, u, q, clock));
  for (int n = 0; n < cfg.max_iters; ++n) {
    Vector cur = u;
    for (int j = 0; j < J; ++j) {
      auto& qj = q[static_cast<std::size_t>(j)];
      Vector next = P.sets[static_cast<std::size_t>(j)].project(cur + qj);
      qj += cur - next;
      cur = std::move(next);
      if (cfg.record_fractional && j + 1 < J) { trace.steps.push_back(pocs_step(P, n, j + 1, cur, q, clock)); }
    }
    const bool stop = stop_rule(cfg, u, cur);
    u = std::move(cur);
    trace.steps.push_back(pocs_step(P, n + 1, 0, u, q, clock));
    if (stop) {
      trace.status = Status::converged;
      return trace;
    }
  }
  return trace;
}

Trace parallel_von_neumann(const PocsProblem& P, const SolverConfig& cfg)
{
  validate(cfg);
  require_sets(P, "parallel_von_neumann");
  const int J = static_cast<int>(P.sets.size());
  const int threads = resolve_threads(cfg.threads);
  Trace trace;
  trace.algorithm = "parallel_von_neumann";
  Stopwatch clock;
  Vector u = P.f;
  trace.steps.push_back(pocs_step(P, 0, 0, u, clock));
  Blocks parts(static_cast<std::size_t>(J));
  for (int n = 0; n < cfg.max_iters; ++n) {
    for_each_block(J, threads, [&](int j) {
      parts[static_cast<std::size_t>(j)] = P.sets[static_cast<std::size_t>(j)].project(u);
    });
    Vector next = (1.0 - cfg.tau * J) * u;
    for (int j = 0; j < J; ++j) { next += cfg.tau * parts[static_cast<std::size_t>(j)]; }
    const bool stop = stop_rule(cfg, u, next);
    u = std::move(next);
    trace.steps.push_back(pocs_step(P, n + 1, 0, u, clock));
    if (stop) {
      trace.status = Status::converged;
      return trace;
    }
  }
  return trace;
}

Trace parallel_dykstra(const PocsProblem& P, const SolverConfig& cfg)
{
  validate(cfg);
  require_sets(P, "parallel_dykstra");
  const int J = static_cast<int>(P.sets.size());
  const int threads = resolve_threads(cfg.threads);
  Trace trace;
  trace.algorithm = "parallel_dykstra";
  Stopwatch clock;
  Vector u = P.f;
  Blocks q(static_cast<std::size_t>(J), Vector::Zero(P.dim()));
  trace.steps.push_back(pocs_step(P, 0, 0, u, q, clock));
  Blocks parts(static_cast<std::size_t>(J));
  for (int n = 0; n < cfg.max_iters; ++n) {
    for_each_block(J, threads, [&](int j) {
      const auto k = static_cast<std::size_t>(j);
      parts[k] = P.sets[k].project(u + q[k]);
      q[k] += cfg.tau * (u - parts[k]);
    });
    Vector next = (1.0 - cfg.tau * J) * u;
    for (int j = 0; j < J; ++j) { next += cfg.tau * parts[static_cast<std::size_t>(j)]; }
    const bool stop = stop_rule(cfg, u, next);
    u = std::move(next);
    trace.steps.push_back(pocs_step(P, n + 1, 0, u, q, clock));
    if (stop) {
      trace.status = Status::converged;
      return trace;
    }
  }
  return trace;
}

DualSetup affine_pocs_dual(const PocsProblem& P)
{
  require_sets(P, "affine_pocs_dual");
  if (!P.all_affine()) { throw Error("affine_pocs_dual: every set must be affine"); }
  if (!P.common_point) { throw Error("affine_pocs_dual: a common point of the sets is required"); }
  std::vector<LinOp> inj;
  for (const auto& K : P.sets) { inj.push_back(LinOp::dense(K.complement_basis())); }
  return DualSetup{ConvexFn::squared_distance(1.0, P.f - *P.common_point), Decomposition(std::move(inj)),
                   Vector::Zero(P.dim())};
}

DualSetup dykstra_dual(const PocsProblem& P)
{
  require_sets(P, "dykstra_dual");
  const Index d = P.dim();
  const int J = static_cast<int>(P.sets.size());
  std::vector<LinOp> ids(static_cast<std::size_t>(J), LinOp::identity(d));
  std::vector<ConvexFn> supports;
  for (const auto& K : P.sets) { supports.push_back(ConvexFn::support(K)); }
  ConvexFn E = ConvexFn::sum({ConvexFn::precompose(ConvexFn::squared_distance(1.0, P.f), LinOp::hcat(ids)),
                              ConvexFn::block_separable(std::move(supports))});
  return DualSetup{E, Decomposition::blocks(std::vector<Index>(static_cast<std::size_t>(J), d)),
                   Vector::Zero(d * J)};
}

} // namespace dualkit
