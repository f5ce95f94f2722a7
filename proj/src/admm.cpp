#include "dualkit/admm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dualkit/parallel.hpp"
#include "dualkit/rng.hpp"

namespace dualkit {

namespace {

void check_block(const AdmmBlock& b, Index w, const std::string& who, std::size_t j)
{
  if (b.B.cols() != b.F.dim() || b.B.rows() != w) {
    throw DimensionError(who + ": block " + std::to_string(j) + " maps " + std::to_string(b.B.cols()) + " -> " +
                         std::to_string(b.B.rows()) + " but F_" + std::to_string(j) + " has dim " +
                         std::to_string(b.F.dim()) + " and g has dim " + std::to_string(w));
  }
}

// argmin F(x) + (β/2)‖Bx − target‖²
Vector penalized_step(const AdmmBlock& b, double beta, const Vector& target, const LocalSolver& ls, int j, int n)
{
  ConvexFn E = ConvexFn::sum({b.F, ConvexFn::precompose(ConvexFn::squared_distance(beta, target), b.B)});
  const Index d = b.F.dim();
  try {
    return ls.minimize(E, Matrix::Identity(d, d), Vector::Zero(d));
  } catch (const SolverError& e) {
    throw SolverError("block " + std::to_string(j) + ", iteration " + std::to_string(n) + ": " + e.what());
  }
}

class DivergenceMonitor {
public:
  explicit DivergenceMonitor(const DivergenceRule& rule) : rule_(rule) {}

  bool diverged(double r)
  {
    if (!std::isfinite(r) || r > rule_.limit) { return true; }
    growth_ = (seen_ && r > prev_) ? growth_ + 1 : 0;
    prev_ = r;
    seen_ = true;
    return rule_.window > 0 && growth_ >= rule_.window;
  }

private:
  DivergenceRule rule_;
  double prev_ = 0.0;
  bool seen_ = false;
  int growth_ = 0;
};

Vector stack(const Blocks& b, const Vector& tail)
{
  Index n = tail.size();
  for (const auto& v : b) { n += v.size(); }
  Vector out(n);
  Index o = 0;
  for (const auto& v : b) {
    out.segment(o, v.size()) = v;
    o += v.size();
  }
  out.tail(tail.size()) = tail;
  return out;
}

void check_start(const ConstrainedProblem& P, const Blocks& u0, const Vector& lambda0, const char* who)
{
  P.validate();
  if (static_cast<int>(u0.size()) != P.size()) {
    throw DimensionError(std::string(who) + ": " + std::to_string(u0.size()) + " start blocks for " +
                         std::to_string(P.size()) + " blocks");
  }
  for (int j = 0; j < P.size(); ++j) { require_dim(u0[static_cast<std::size_t>(j)], P.block_dim(j), who); }
  require_dim(lambda0, P.g.size(), who);
}

TraceStep admm_record(const ConstrainedProblem& P, int n, const Blocks& u, const Vector& lambda,
                      const Stopwatch& clock)
{
  TraceStep s;
  s.iter = n;
  s.vars["u"] = u;
  s.vars["lambda"] = {lambda};
  s.metrics["constraint"] = P.constraint_residual(u);
  s.metrics["objective"] = P.objective(u);
  s.time_s = clock.seconds();
  return s;
}

// Sweeps the blocks in the order given per iteration, then λ += β(ΣB_ju_j − g).
template <class OrderFn>
Trace sweep_admm(const ConstrainedProblem& P, const LocalSolver& ls, const SolverConfig& cfg, const Blocks& u0,
                 const Vector& lambda0, const DivergenceRule& rule, const char* name, OrderFn order_of,
                 bool record_order)
{
  validate(cfg);
  check_start(P, u0, lambda0, name);
  const int J = P.size();
  Trace trace;
  trace.algorithm = name;
  Stopwatch clock;
  Blocks u = u0;
  Vector lambda = lambda0;
  std::vector<Vector> Bu(static_cast<std::size_t>(J));
  for (int j = 0; j < J; ++j) { Bu[static_cast<std::size_t>(j)] = P.blocks[static_cast<std::size_t>(j)].B.apply(u[static_cast<std::size_t>(j)]); }
  trace.steps.push_back(admm_record(P, 0, u, lambda, clock));
  DivergenceMonitor monitor(rule);
  for (int n = 0; n < cfg.max_iters; ++n) {
    const Vector before = stack(u, lambda);
    const std::vector<int> order = order_of(n);
    for (int j : order) {
      const auto jj = static_cast<std::size_t>(j);
      Vector target = P.g - lambda / P.beta;
      for (int i = 0; i < J; ++i) {
        if (i != j) { target -= Bu[static_cast<std::size_t>(i)]; }
      }
      u[jj] = penalized_step(P.blocks[jj], P.beta, target, ls, j, n);
      Bu[jj] = P.blocks[jj].B.apply(u[jj]);
    }
    Vector r = -P.g;
    for (const auto& b : Bu) { r += b; }
    lambda += P.beta * r;
    trace.steps.push_back(admm_record(P, n + 1, u, lambda, clock));
    if (record_order) { trace.steps.back().permutation = order; }
    if (monitor.diverged(trace.steps.back().metrics["constraint"])) {
      trace.status = Status::diverged;
      return trace;
    }
    if (stop_rule(cfg, before, stack(u, lambda))) {
      trace.status = Status::converged;
      return trace;
    }
  }
  return trace;
}

std::vector<int> identity_order(int J)
{
  std::vector<int> o(static_cast<std::size_t>(J));
  std::iota(o.begin(), o.end(), 0);
  return o;
}

void check_sharing_start(const SharingProblem& P, const Blocks& v0, const Vector& lambda0, const char* who)
{
  P.validate();
  if (static_cast<int>(v0.size()) != P.size()) {
    throw DimensionError(std::string(who) + ": " + std::to_string(v0.size()) + " start blocks for " +
                         std::to_string(P.size()) + " terms");
  }
  for (const auto& v : v0) { require_dim(v, P.g.size(), who); }
  require_dim(lambda0, P.g.size(), who);
}

// ‖Σv_j − g − λ/β‖; the updates preserve it, so runs need a start where it vanishes.
double sharing_coupling(const SharingProblem& P, const Blocks& v, const Vector& lambda)
{
  Vector r = -P.g - lambda / P.beta;
  for (const auto& vj : v) { r += vj; }
  return r.norm();
}

Matrix block_mask_lower(const Matrix& A, const std::vector<Index>& offsets, const std::vector<int>& position)
{
  const int J = static_cast<int>(offsets.size()) - 1;
  Matrix T = Matrix::Zero(A.rows(), A.cols());
  for (int r = 0; r < J; ++r) {
    for (int c = 0; c < J; ++c) {
      if (position[static_cast<std::size_t>(r)] < position[static_cast<std::size_t>(c)]) { continue; }
      const Index r0 = offsets[static_cast<std::size_t>(r)], c0 = offsets[static_cast<std::size_t>(c)];
      const Index nr = offsets[static_cast<std::size_t>(r) + 1] - r0, nc = offsets[static_cast<std::size_t>(c) + 1] - c0;
      T.block(r0, c0, nr, nc) = A.block(r0, c0, nr, nc);
    }
  }
  return T;
}

Matrix block_diagonal_part(const Matrix& A, const std::vector<Index>& offsets)
{
  Matrix D = Matrix::Zero(A.rows(), A.cols());
  for (std::size_t j = 0; j + 1 < offsets.size(); ++j) {
    const Index o = offsets[j], n = offsets[j + 1] - o;
    D.block(o, o, n, n) = A.block(o, o, n, n);
  }
  return D;
}

double symmetry_defect(const Matrix& R, std::uint64_t seed)
{
  Rng rng(mix_seed(seed, 0x5e11));
  const double scale = std::max(1.0, R.norm());
  double worst = 0.0;
  for (int k = 0; k < 16; ++k) {
    Vector x = rng.normal_vector(R.cols()), y = rng.normal_vector(R.cols());
    const double d = std::abs(x.dot(R * y) - y.dot(R * x)) / (x.norm() * y.norm() * scale);
    worst = std::max(worst, d);
  }
  return worst;
}

double min_sym_eig(const Matrix& M)
{
  Matrix S = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

} // namespace

void ConstrainedProblem::validate() const
{
  if (blocks.empty()) { throw Error("constrained problem: no blocks"); }
  if (!(beta > 0.0) || !std::isfinite(beta)) { throw Error("constrained problem: beta must be positive"); }
  require_finite(g, "constraint right-hand side g");
  for (std::size_t j = 0; j < blocks.size(); ++j) { check_block(blocks[j], g.size(), "constrained problem", j); }
}

double ConstrainedProblem::constraint_residual(const Blocks& u) const
{
  Vector r = -g;
  for (std::size_t j = 0; j < blocks.size(); ++j) { r += blocks[j].B.apply(u[j]); }
  return r.norm();
}

double ConstrainedProblem::objective(const Blocks& u) const
{
  double v = 0.0;
  for (std::size_t j = 0; j < blocks.size(); ++j) { v = ext_add(v, eval(blocks[j].F, u[j])); }
  return v;
}

void SharingProblem::validate() const
{
  if (terms.empty()) { throw Error("sharing problem: no terms"); }
  if (!(beta > 0.0) || !std::isfinite(beta)) { throw Error("sharing problem: beta must be positive"); }
  require_finite(g, "sharing target g");
  for (std::size_t j = 0; j < terms.size(); ++j) { check_block(terms[j], g.size(), "sharing problem", j); }
}

double SharingProblem::objective(const Blocks& w) const
{
  Vector r = -g;
  double v = 0.0;
  for (std::size_t j = 0; j < terms.size(); ++j) {
    v = ext_add(v, eval(terms[j].F, w[j]));
    r += terms[j].B.apply(w[j]);
  }
  return ext_add(v, 0.5 * beta * r.squaredNorm());
}

SharingEnergy sharing_energy(const SharingProblem& P)
{
  P.validate();
  std::vector<ConvexFn> local;
  std::vector<LinOp> ops;
  std::vector<Index> sizes;
  for (const auto& t : P.terms) {
    local.push_back(t.F);
    ops.push_back(t.B);
    sizes.push_back(t.F.dim());
  }
  ConvexFn E = ConvexFn::sum({ConvexFn::block_separable(std::move(local)),
                              ConvexFn::precompose(ConvexFn::squared_distance(P.beta, P.g), LinOp::hcat(std::move(ops)))});
  return SharingEnergy{E, Decomposition::blocks(sizes)};
}

MultiConvexProblem sharing_dual(const SharingProblem& P)
{
  P.validate();
  MultiConvexProblem D{ConvexFn::tilt(ConvexFn::squared_distance(1.0 / P.beta, Vector::Zero(P.g.size())), P.g), {}};
  for (const auto& t : P.terms) {
    D.terms.push_back(ConvexTerm{conjugate(t.F), LinOp::compose(LinOp::scaling(t.F.dim(), -1.0), t.B.adjoint())});
  }
  return D;
}

Trace admm_plain(const ConstrainedProblem& P, const LocalSolver& ls, const SolverConfig& cfg, const Blocks& u0,
                 const Vector& lambda0, const DivergenceRule& rule)
{
  const int J = P.size();
  return sweep_admm(P, ls, cfg, u0, lambda0, rule, "admm_plain", [J](int) { return identity_order(J); }, false);
}

Trace admm_symmetrized(const ConstrainedProblem& P, const LocalSolver& ls, const SolverConfig& cfg,
                       const Blocks& u0, const Vector& lambda0, const DivergenceRule& rule)
{
  const int J = P.size();
  std::vector<int> order = identity_order(J);
  for (int j = J - 1; j >= 0; --j) { order.push_back(j); }
  if (J == 1) { order.resize(1); }
  return sweep_admm(P, ls, cfg, u0, lambda0, rule, "admm_symmetrized", [order](int) { return order; }, false);
}

Trace admm_random_permuted(const ConstrainedProblem& P, const LocalSolver& ls, const SolverConfig& cfg,
                           const Blocks& u0, const Vector& lambda0, const DivergenceRule& rule)
{
  const int J = P.size();
  const std::uint64_t seed = cfg.seed;
  return sweep_admm(
      P, ls, cfg, u0, lambda0, rule, "admm_random_permuted",
      [J, seed](int n) { return counter_permutation(J, seed, static_cast<std::uint64_t>(n)); }, true);
}

namespace {

void check_two_block(const ConstrainedProblem& P, const char* who)
{
  P.validate();
  if (P.size() != 2) { throw Error(std::string(who) + ": needs exactly two blocks"); }
  const auto& B2 = P.blocks[1].B;
  auto s = B2.scalar_identity();
  bool minus_identity = s && *s == -1.0;
  if (!minus_identity && B2.rows() == B2.cols()) {
    minus_identity = (B2.to_dense() + Matrix::Identity(B2.rows(), B2.cols())).norm() == 0.0;
  }
  if (!minus_identity) { throw Error(std::string(who) + ": the second block must be coupled by B_2 = -I"); }
}

} // namespace

Trace admm_two_block(const ConstrainedProblem& P, const LocalSolver& ls, const SolverConfig& cfg,
                     const Vector& u1_0, const Vector& u2_0, const Vector& lambda0, const DivergenceRule& rule)
{
  check_two_block(P, "admm_two_block");
  Trace t = admm_plain(P, ls, cfg, {u1_0, u2_0}, lambda0, rule);
  t.algorithm = "admm_two_block";
  for (auto& s : t.steps) {
    Blocks u = s.vars["u"];
    s.vars.erase("u");
    s.vars["u1"] = {u[0]};
    s.vars["u2"] = {u[1]};
  }
  return t;
}

Trace dr_dual_two_block(const ConstrainedProblem& P, const LocalSolver& ls, const SolverConfig& cfg,
                        const Vector& p0, const Vector& q0, const Vector& r0)
{
  validate(cfg);
  check_two_block(P, "dr_dual_two_block");
  const Index w = P.g.size();
  require_dim(p0, w, "dr_dual_two_block p0");
  require_dim(q0, w, "dr_dual_two_block q0");
  require_dim(r0, w, "dr_dual_two_block r0");
  const auto& b1 = P.blocks[0];
  const ConvexFn f1_conj_minus =
      ConvexFn::precompose(conjugate(b1.F), LinOp::compose(LinOp::scaling(b1.F.dim(), -1.0), b1.B.adjoint()));
  const ConvexFn f2_conj = conjugate(P.blocks[1].F);
  const ConvexFn dual = ConvexFn::sum({f1_conj_minus, ConvexFn::linear(P.g), f2_conj});
  const Matrix I = Matrix::Identity(w, w);
  const Vector zero = Vector::Zero(w);
  Trace trace;
  trace.algorithm = "dr_dual_two_block";
  Stopwatch clock;
  Vector p = p0, q = q0, r = r0;
  auto record = [&](int n) {
    TraceStep s;
    s.iter = n;
    s.vars["p"] = {p};
    s.vars["q"] = {q};
    s.vars["r"] = {r};
    s.metrics["objective"] = eval(dual, p);
    s.time_s = clock.seconds();
    trace.steps.push_back(std::move(s));
  };
  record(0);
  for (int n = 0; n < cfg.max_iters; ++n) {
    const Vector before = stack({p, q}, r);
    ConvexFn Ep = ConvexFn::sum(
        {f1_conj_minus, ConvexFn::linear(P.g), ConvexFn::squared_distance(1.0 / P.beta, 2.0 * r - q)});
    try {
      p = ls.minimize(Ep, I, zero);
    } catch (const SolverError& e) {
      throw SolverError("dr_dual_two_block p-step, iteration " + std::to_string(n) + ": " + e.what());
    }
    q = p + q - r;
    if (has_prox(f2_conj)) {
      r = prox(f2_conj, q, P.beta);
    } else {
      r = ls.minimize(ConvexFn::sum({f2_conj, ConvexFn::squared_distance(1.0 / P.beta, q)}), I, zero);
    }
    record(n + 1);
    if (stop_rule(cfg, before, stack({p, q}, r))) {
      trace.status = Status::converged;
      return trace;
    }
  }
  return trace;
}

Trace alm(const ConstrainedProblem& P, const LocalSolver& ls, const SolverConfig& cfg, const Vector& u0,
          const Vector& lambda0, const DivergenceRule& rule)
{
  P.validate();
  if (P.size() != 1) { throw Error("alm: needs exactly one block"); }
  Trace t = admm_plain(P, ls, cfg, {u0}, lambda0, rule);
  t.algorithm = "alm";
  return t;
}

ConvexFn alm_dual_energy(const ConstrainedProblem& P)
{
  P.validate();
  if (P.size() != 1) { throw Error("alm_dual_energy: needs exactly one block"); }
  const auto& b = P.blocks[0];
  return ConvexFn::sum({ConvexFn::precompose(conjugate(b.F), LinOp::compose(LinOp::scaling(b.F.dim(), -1.0), b.B.adjoint())),
                        ConvexFn::linear(P.g)});
}

Trace proximal_point(const ConvexFn& E, double beta, const LocalSolver& ls, const SolverConfig& cfg, const Vector& p0)
{
  validate(cfg);
  if (!(beta > 0.0)) { throw Error("proximal_point: step must be positive"); }
  require_dim(p0, E.dim(), "proximal_point start");
  const Index d = E.dim();
  const Matrix I = Matrix::Identity(d, d);
  Trace trace;
  trace.algorithm = "proximal_point";
  Stopwatch clock;
  Vector p = p0;
  auto record = [&](int n) {
    TraceStep s;
    s.iter = n;
    s.vars["p"] = {p};
    s.metrics["objective"] = eval(E, p);
    s.time_s = clock.seconds();
    trace.steps.push_back(std::move(s));
  };
  record(0);
  for (int n = 0; n < cfg.max_iters; ++n) {
    Vector next;
    try {
      next = ls.minimize(ConvexFn::sum({E, ConvexFn::squared_distance(1.0 / beta, p)}), I, Vector::Zero(d));
    } catch (const SolverError& e) {
      throw SolverError("proximal_point, iteration " + std::to_string(n) + ": " + e.what());
    }
    const bool stop = stop_rule(cfg, p, next);
    p = std::move(next);
    record(n + 1);
    if (stop) {
      trace.status = Status::converged;
      return trace;
    }
  }
  return trace;
}

Trace admm_dualization_based(const SharingProblem& P, const LocalSolver& ls, const SolverConfig& cfg,
                             const Blocks& v0, const Vector& lambda0, const DivergenceRule& rule)
{
  validate(cfg);
  check_sharing_start(P, v0, lambda0, "admm_dualization_based");
  if (!(cfg.tau > 0.0) || cfg.tau > 1.0) { throw Error("admm_dualization_based: tau must lie in (0, 1]"); }
  const int J = P.size();
  Trace trace;
  trace.algorithm = "admm_dualization_based";
  Stopwatch clock;
  Blocks v = v0;
  Vector lambda = lambda0;
  Blocks u_hat(static_cast<std::size_t>(J)), lambda_hat(static_cast<std::size_t>(J));
  double consensus = 0.0;
  auto record = [&](int n) {
    TraceStep s;
    s.iter = n;
    s.vars["v"] = v;
    s.vars["lambda"] = {lambda};
    s.metrics["coupling"] = sharing_coupling(P, v, lambda);
    if (n > 0) {
      s.vars["u_hat"] = u_hat;
      s.vars["lambda_hat"] = lambda_hat;
      s.metrics["objective"] = P.objective(u_hat);
      s.metrics["consensus"] = std::sqrt(consensus);
    }
    s.time_s = clock.seconds();
    trace.steps.push_back(std::move(s));
  };
  record(0);
  DivergenceMonitor monitor(rule);
  for (int n = 0; n < cfg.max_iters; ++n) {
    const Vector before = stack(v, lambda);
    Vector lh = lambda;
    consensus = 0.0;
    for (int j = 0; j < J; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      const auto& t = P.terms[jj];
      u_hat[jj] = penalized_step(t, P.beta, v[jj] - lh / P.beta, ls, j, n);
      const Vector Bu = t.B.apply(u_hat[jj]);
      lh += P.beta * (Bu - v[jj]);
      consensus += (Bu - v[jj]).squaredNorm();
      v[jj] = (1.0 - cfg.tau) * v[jj] + cfg.tau * Bu;
      lambda_hat[jj] = lh;
    }
    lambda = (1.0 - cfg.tau) * lambda + cfg.tau * lh;
    record(n + 1);
    if (monitor.diverged(trace.steps.back().metrics["consensus"])) {
      trace.status = Status::diverged;
      return trace;
    }
    if (stop_rule(cfg, before, stack(v, lambda))) {
      trace.status = Status::converged;
      return trace;
    }
  }
  return trace;
}

Trace admm_dualization_parallel(const SharingProblem& P, const LocalSolver& ls, const SolverConfig& cfg,
                                const Blocks& v0, const Vector& lambda0, const DivergenceRule& rule)
{
  validate(cfg);
  check_sharing_start(P, v0, lambda0, "admm_dualization_parallel");
  if (!(cfg.tau > 0.0)) { throw Error("admm_dualization_parallel: tau must be positive"); }
  const int J = P.size();
  const int threads = resolve_threads(cfg.threads);
  Trace trace;
  trace.algorithm = "admm_dualization_parallel";
  Stopwatch clock;
  Blocks v = v0;
  Vector lambda = lambda0;
  Blocks u(static_cast<std::size_t>(J)), parts(static_cast<std::size_t>(J)), Bu(static_cast<std::size_t>(J));
  double consensus = 0.0;
  auto record = [&](int n) {
    TraceStep s;
    s.iter = n;
    s.vars["v"] = v;
    s.vars["lambda"] = {lambda};
    s.metrics["coupling"] = sharing_coupling(P, v, lambda);
    if (n > 0) {
      s.vars["u"] = u;
      s.vars["lambda_parts"] = parts;
      s.metrics["objective"] = P.objective(u);
      s.metrics["consensus"] = std::sqrt(consensus);
    }
    s.time_s = clock.seconds();
    trace.steps.push_back(std::move(s));
  };
  record(0);
  DivergenceMonitor monitor(rule);
  for (int n = 0; n < cfg.max_iters; ++n) {
    const Vector before = stack(v, lambda);
    for_each_block(J, threads, [&](int j) {
      const auto jj = static_cast<std::size_t>(j);
      const auto& t = P.terms[jj];
      u[jj] = penalized_step(t, P.beta, v[jj] - lambda / P.beta, ls, j, n);
      Bu[jj] = t.B.apply(u[jj]);
      parts[jj] = lambda + P.beta * (Bu[jj] - v[jj]);
    });
    Vector shift = Vector::Zero(P.g.size());
    consensus = 0.0;
    for (int j = 0; j < J; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      shift += Bu[jj] - v[jj];
      consensus += (Bu[jj] - v[jj]).squaredNorm();
      v[jj] = (1.0 - cfg.tau) * v[jj] + cfg.tau * Bu[jj];
    }
    lambda += cfg.tau * P.beta * shift;
    record(n + 1);
    if (monitor.diverged(trace.steps.back().metrics["consensus"])) {
      trace.status = Status::diverged;
      return trace;
    }
    if (stop_rule(cfg, before, stack(v, lambda))) {
      trace.status = Status::converged;
      return trace;
    }
  }
  return trace;
}

QuadraticSaddle assemble_saddle(const ConstrainedProblem& P)
{
  P.validate();
  QuadraticSaddle S;
  S.offsets.push_back(0);
  std::vector<QuadraticForm> forms;
  for (int j = 0; j < P.size(); ++j) {
    auto q = as_quadratic(P.blocks[static_cast<std::size_t>(j)].F);
    if (!q) { throw Error("uzawa: block " + std::to_string(j) + " is not quadratic"); }
    forms.push_back(*q);
    S.offsets.push_back(S.offsets.back() + P.block_dim(j));
  }
  const Index n = S.offsets.back();
  S.B = Matrix::Zero(P.g.size(), n);
  Matrix A = Matrix::Zero(n, n);
  Vector f(n);
  for (int j = 0; j < P.size(); ++j) {
    const auto jj = static_cast<std::size_t>(j);
    const Index o = S.offsets[jj], d = P.block_dim(j);
    A.block(o, o, d, d) = forms[jj].A;
    f.segment(o, d) = forms[jj].f;
    S.B.middleCols(o, d) = P.blocks[jj].B.to_dense();
  }
  S.A_beta = A + P.beta * S.B.transpose() * S.B;
  S.f_beta = f + P.beta * S.B.transpose() * P.g;
  return S;
}

UzawaSmootherPair plain_smoother(const QuadraticSaddle& S, double beta)
{
  const int J = static_cast<int>(S.offsets.size()) - 1;
  std::vector<int> pos(static_cast<std::size_t>(J));
  std::iota(pos.begin(), pos.end(), 0);
  Matrix T = block_mask_lower(S.A_beta, S.offsets, pos);
  UzawaSmootherPair R;
  R.name = "plain";
  R.R_V = T.partialPivLu().inverse();
  R.R_W = beta * Matrix::Identity(S.B.rows(), S.B.rows());
  R.symmetric_V = symmetry_defect(R.R_V, 0) <= 1e-10;
  return R;
}

UzawaSmootherPair symmetrized_smoother(const QuadraticSaddle& S, double beta)
{
  const int J = static_cast<int>(S.offsets.size()) - 1;
  std::vector<int> pos(static_cast<std::size_t>(J));
  std::iota(pos.begin(), pos.end(), 0);
  Matrix Tinv = block_mask_lower(S.A_beta, S.offsets, pos).partialPivLu().inverse();
  UzawaSmootherPair R;
  R.name = "symmetrized";
  R.R_V = Tinv.transpose() * block_diagonal_part(S.A_beta, S.offsets) * Tinv;
  R.R_W = beta * Matrix::Identity(S.B.rows(), S.B.rows());
  R.symmetric_V = symmetry_defect(R.R_V, 0) <= 1e-10;
  return R;
}

UzawaSmootherPair random_smoother(const QuadraticSaddle& S, double beta)
{
  const int J = static_cast<int>(S.offsets.size()) - 1;
  if (J > 4) { throw Error("uzawa: the expectation smoother is enumerated only for J <= 4, got J = " + std::to_string(J)); }
  std::vector<int> sigma(static_cast<std::size_t>(J));
  std::iota(sigma.begin(), sigma.end(), 0);
  Matrix sum = Matrix::Zero(S.A_beta.rows(), S.A_beta.cols());
  int count = 0;
  do {
    // position of block sigma[k] in the sweep is k
    std::vector<int> pos(static_cast<std::size_t>(J));
    for (int k = 0; k < J; ++k) { pos[static_cast<std::size_t>(sigma[static_cast<std::size_t>(k)])] = k; }
    sum += block_mask_lower(S.A_beta, S.offsets, pos).partialPivLu().inverse();
    ++count;
  } while (std::next_permutation(sigma.begin(), sigma.end()));
  UzawaSmootherPair R;
  R.name = "random";
  R.R_V = sum / count;
  R.R_W = beta * Matrix::Identity(S.B.rows(), S.B.rows());
  R.symmetric_V = symmetry_defect(R.R_V, 0) <= 1e-10;
  return R;
}

void uzawa_step(const QuadraticSaddle& S, const UzawaSmootherPair& R, const Vector& g, Vector& u, Vector& lambda)
{
  u += R.R_V * (S.f_beta - S.A_beta * u - S.B.transpose() * lambda);
  lambda += R.R_W * (S.B * u - g);
}

nlohmann::json UzawaReport::to_json() const
{
  return {{"smoother", smoother},
          {"symmetric", symmetric},
          {"symmetry_defect", symmetry_defect},
          {"min_eig_primal", min_eig_primal},
          {"min_eig_dual", min_eig_dual},
          {"primal_condition", primal_condition},
          {"dual_condition", dual_condition},
          {"guarantee", guaranteed ? "convergent" : "no guarantee"}};
}

UzawaReport uzawa_check_quadratic(const ConstrainedProblem& P, const UzawaSmootherPair& R, double tol,
                                  std::uint64_t seed)
{
  QuadraticSaddle S = assemble_saddle(P);
  if (R.R_V.rows() != S.A_beta.rows() || R.R_V.cols() != S.A_beta.cols() || R.R_W.rows() != S.B.rows() ||
      R.R_W.cols() != S.B.rows()) {
    throw DimensionError("uzawa: smoother dimensions do not match the assembled system");
  }
  UzawaReport rep;
  rep.smoother = R.name;
  rep.symmetry_defect = symmetry_defect(R.R_V, seed);
  rep.symmetric = rep.symmetry_defect <= tol;
  rep.min_eig_primal = min_sym_eig(R.R_V.partialPivLu().inverse() - S.A_beta);
  Matrix schur = S.B * SpdSolver(S.A_beta).solve_many(S.B.transpose());
  rep.min_eig_dual = min_sym_eig(R.R_W.partialPivLu().inverse() - schur);
  rep.primal_condition = rep.min_eig_primal >= -tol;
  rep.dual_condition = rep.min_eig_dual >= -tol;
  rep.guaranteed = rep.symmetric && rep.primal_condition && rep.dual_condition;
  return rep;
}

} // namespace dualkit
