#include "dualkit/correction.hpp"

#include <cmath>

#include "dualkit/parallel.hpp"
#include "dualkit/rng.hpp"

namespace dualkit {

namespace {

// Offset of the identity block when m = [0; I; 0], otherwise -1.
Index selection_offset(const Matrix& m)
{
  const Index r = m.rows(), c = m.cols();
  if (c == 0 || c > r) { return -1; }
  Index off = -1;
  for (Index i = 0; i < r; ++i) {
    if (m(i, 0) == 1.0) { off = i; break; }
  }
  if (off < 0 || off + c > r) { return -1; }
  Matrix expected = Matrix::Zero(r, c);
  expected.middleRows(off, c) = Matrix::Identity(c, c);
  return m == expected ? off : -1;
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

TraceStep make_step(int n, int sub, const ConvexFn& E, const Vector& u, const Stopwatch& clock)
{
  TraceStep s;
  s.iter = n;
  s.sub = sub;
  s.vars["u"] = {u};
  s.metrics["objective"] = eval(E, u);
  s.time_s = clock.seconds();
  return s;
}

Vector local_correction(const ConvexFn& E, const Decomposition& d, const LocalSolver& ls, int j, const Vector& u,
                        int n)
{
  try {
    return ls.minimize(E, d.injection_matrix(j), u);
  } catch (const SolverError& e) {
    throw SolverError("subspace " + std::to_string(j) + ", iteration " + std::to_string(n) + ": " + e.what());
  }
}

void check_dims(const ConvexFn& E, const Decomposition& d, const Vector& u0, const char* who)
{
  if (E.dim() != d.dim()) {
    throw DimensionError(std::string(who) + ": energy dim " + std::to_string(E.dim()) + " but decomposition dim " +
                         std::to_string(d.dim()));
  }
  require_dim(u0, d.dim(), who);
}

// Full SSC sweep from u; records fractional states when asked.
Vector ssc_sweep(const ConvexFn& E, const Decomposition& d, const LocalSolver& ls, const SolverConfig& cfg,
                 const Vector& u, int n, bool record, Trace& trace, const Stopwatch& clock)
{
  const int J = d.size();
  Vector cur = u;
  const auto order = sweep_order(cfg, J, n);
  for (int k = 0; k < J; ++k) {
    const int j = order[static_cast<std::size_t>(k)];
    cur += d.injection_matrix(j) * local_correction(E, d, ls, j, cur, n);
    if (record && k + 1 < J) { trace.steps.push_back(make_step(n, k + 1, E, cur, clock)); }
  }
  return cur;
}

} // namespace

Decomposition::Decomposition(std::vector<LinOp> injections) : injections_(std::move(injections))
{
  if (injections_.empty()) { throw Error("decomposition needs at least one subspace"); }
  dim_ = injections_[0].rows();
  direct_ = true;
  Index next = 0;
  for (const auto& op : injections_) {
    if (op.rows() != dim_) { throw DimensionError("decomposition: injections have different codomains"); }
    dense_.push_back(op.to_dense());
    const Index off = selection_offset(dense_.back());
    if (off != next) { direct_ = false; }
    offsets_.push_back(off);
    next = off + op.cols();
  }
  if (next != dim_) { direct_ = false; }
  if (!direct_) { offsets_.clear(); }
}

Decomposition Decomposition::blocks(const std::vector<Index>& sizes)
{
  Index total = 0;
  for (Index s : sizes) {
    if (s <= 0) { throw Error("decomposition: block sizes must be positive"); }
    total += s;
  }
  std::vector<LinOp> inj;
  Index o = 0;
  for (Index s : sizes) {
    Matrix m = Matrix::Zero(total, s);
    m.middleRows(o, s) = Matrix::Identity(s, s);
    inj.push_back(LinOp::dense(std::move(m)));
    o += s;
  }
  return Decomposition(std::move(inj));
}

LinOp Decomposition::sum_operator() const { return LinOp::hcat(injections_); }

Vector Decomposition::block(const Vector& u, int j) const
{
  if (!direct_) { throw Error("decomposition: blocks exist only for direct products"); }
  return u.segment(offsets_[static_cast<std::size_t>(j)], block_size(j));
}

Blocks Decomposition::split(const Vector& u) const
{
  Blocks out;
  for (int j = 0; j < size(); ++j) { out.push_back(block(u, j)); }
  return out;
}

Trace psc(const ConvexFn& E, const Decomposition& d, const LocalSolver& ls, const SolverConfig& cfg,
          const Vector& u0)
{
  validate(cfg);
  check_dims(E, d, u0, "psc");
  const int J = d.size();
  Trace trace;
  trace.algorithm = "psc";
  if (cfg.tau > 1.0 / J * (1.0 + 1e-12)) {
    if (!cfg.allow_large_step) {
      throw Error("psc: tau = " + std::to_string(cfg.tau) + " exceeds 1/J = " + std::to_string(1.0 / J) +
                  "; set allow_large_step to override");
    }
    const auto chk = strengthened_convexity(E, d, cfg.tau, cfg.seed);
    if (!chk.holds) {
      trace.warnings.push_back("strengthened convexity fails for tau = " + std::to_string(cfg.tau) +
                               " (worst violation " + std::to_string(chk.worst_violation) +
                               "); convergence is not guaranteed");
    }
  }
  const int threads = resolve_threads(cfg.threads);
  Stopwatch clock;
  Vector u = u0;
  trace.steps.push_back(make_step(0, 0, E, u, clock));
  std::vector<Vector> w(static_cast<std::size_t>(J));
  for (int n = 0; n < cfg.max_iters; ++n) {
    for_each_block(J, threads, [&](int j) { w[static_cast<std::size_t>(j)] = local_correction(E, d, ls, j, u, n); });
    Vector next = u;
    for (int j = 0; j < J; ++j) { next += cfg.tau * (d.injection_matrix(j) * w[static_cast<std::size_t>(j)]); }
    const bool stop = stop_rule(cfg, u, next);
    u = std::move(next);
    trace.steps.push_back(make_step(n + 1, 0, E, u, clock));
    if (stop) {
      trace.status = Status::converged;
      return trace;
    }
  }
  trace.status = Status::max_iters;
  return trace;
}

Trace ssc(const ConvexFn& E, const Decomposition& d, const LocalSolver& ls, const SolverConfig& cfg,
          const Vector& u0)
{
  validate(cfg);
  check_dims(E, d, u0, "ssc");
  Trace trace;
  trace.algorithm = "ssc";
  Stopwatch clock;
  Vector u = u0;
  trace.steps.push_back(make_step(0, 0, E, u, clock));
  for (int n = 0; n < cfg.max_iters; ++n) {
    Vector next = ssc_sweep(E, d, ls, cfg, u, n, cfg.record_fractional, trace, clock);
    const bool stop = stop_rule(cfg, u, next);
    u = std::move(next);
    trace.steps.push_back(make_step(n + 1, 0, E, u, clock));
    if (cfg.permutation == PermutationMode::random_each_sweep) {
      trace.steps.back().permutation = sweep_order(cfg, d.size(), n);
    }
    if (stop) {
      trace.status = Status::converged;
      return trace;
    }
  }
  trace.status = Status::max_iters;
  return trace;
}

Trace relaxed_ssc(const ConvexFn& E, const Decomposition& d, const LocalSolver& ls, const SolverConfig& cfg,
                  const Vector& u0)
{
  validate(cfg);
  check_dims(E, d, u0, "relaxed_ssc");
  if (!(cfg.tau > 0.0) || cfg.tau > 1.0) { throw Error("relaxed_ssc: tau must lie in (0, 1]"); }
  Trace trace;
  trace.algorithm = "relaxed_ssc";
  Stopwatch clock;
  Vector u = u0;
  trace.steps.push_back(make_step(0, 0, E, u, clock));
  for (int n = 0; n < cfg.max_iters; ++n) {
    const Vector hat = ssc_sweep(E, d, ls, cfg, u, n, false, trace, clock);
    Vector next = cfg.tau == 1.0 ? hat : Vector((1.0 - cfg.tau) * u + cfg.tau * hat);
    const bool stop = stop_rule(cfg, u, next);
    u = std::move(next);
    trace.steps.push_back(make_step(n + 1, 0, E, u, clock));
    trace.steps.back().vars["u_hat"] = {hat};
    if (stop) {
      trace.status = Status::converged;
      return trace;
    }
  }
  trace.status = Status::max_iters;
  return trace;
}

ExpandedProblem expand_problem(const ConvexFn& E, const Decomposition& d)
{
  if (E.dim() != d.dim()) { throw DimensionError("expand_problem: energy and decomposition dims differ"); }
  LinOp sum = d.sum_operator();
  std::vector<Index> sizes;
  for (int j = 0; j < d.size(); ++j) { sizes.push_back(d.block_size(j)); }
  ConvexFn energy = d.size() == 1 && d.is_direct_product() ? E : ConvexFn::precompose(E, sum);
  return ExpandedProblem{energy, sum, Decomposition::blocks(sizes)};
}

namespace {

// argmin of E over block j with the other blocks fixed at u.
Vector block_minimizer(const ConvexFn& E, const Decomposition& b, const LocalSolver& ls, int j, const Vector& u,
                       int n)
{
  Vector s = u;
  s.segment(b.offsets()[static_cast<std::size_t>(j)], b.block_size(j)).setZero();
  try {
    return ls.minimize(E, b.injection_matrix(j), s);
  } catch (const SolverError& e) {
    throw SolverError("block " + std::to_string(j) + ", iteration " + std::to_string(n) + ": " + e.what());
  }
}

void require_direct(const Decomposition& b, const char* who)
{
  if (!b.is_direct_product()) { throw Error(std::string(who) + ": needs a direct-product block structure"); }
}

} // namespace

Trace block_jacobi(const ConvexFn& E, const Decomposition& blocks, const LocalSolver& ls, const SolverConfig& cfg,
                   const Vector& u0)
{
  validate(cfg);
  check_dims(E, blocks, u0, "block_jacobi");
  require_direct(blocks, "block_jacobi");
  const int J = blocks.size();
  const int threads = resolve_threads(cfg.threads);
  Trace trace;
  trace.algorithm = "block_jacobi";
  Stopwatch clock;
  Vector u = u0;
  trace.steps.push_back(make_step(0, 0, E, u, clock));
  std::vector<Vector> hat(static_cast<std::size_t>(J));
  for (int n = 0; n < cfg.max_iters; ++n) {
    for_each_block(J, threads,
                   [&](int j) { hat[static_cast<std::size_t>(j)] = block_minimizer(E, blocks, ls, j, u, n); });
    Vector next(u.size());
    for (int j = 0; j < J; ++j) {
      const Index o = blocks.offsets()[static_cast<std::size_t>(j)];
      const Index m = blocks.block_size(j);
      next.segment(o, m) = (1.0 - cfg.tau) * u.segment(o, m) + cfg.tau * hat[static_cast<std::size_t>(j)];
    }
    const bool stop = stop_rule(cfg, u, next);
    u = std::move(next);
    trace.steps.push_back(make_step(n + 1, 0, E, u, clock));
    if (stop) {
      trace.status = Status::converged;
      return trace;
    }
  }
  trace.status = Status::max_iters;
  return trace;
}

Trace block_gauss_seidel(const ConvexFn& E, const Decomposition& blocks, const LocalSolver& ls,
                         const SolverConfig& cfg, const Vector& u0)
{
  validate(cfg);
  check_dims(E, blocks, u0, "block_gauss_seidel");
  require_direct(blocks, "block_gauss_seidel");
  const int J = blocks.size();
  Trace trace;
  trace.algorithm = "block_gauss_seidel";
  Stopwatch clock;
  Vector u = u0;
  trace.steps.push_back(make_step(0, 0, E, u, clock));
  for (int n = 0; n < cfg.max_iters; ++n) {
    Vector cur = u;
    const auto order = sweep_order(cfg, J, n);
    for (int k = 0; k < J; ++k) {
      const int j = order[static_cast<std::size_t>(k)];
      cur.segment(blocks.offsets()[static_cast<std::size_t>(j)], blocks.block_size(j)) =
          block_minimizer(E, blocks, ls, j, cur, n);
      if (cfg.record_fractional && k + 1 < J) { trace.steps.push_back(make_step(n, k + 1, E, cur, clock)); }
    }
    const bool stop = stop_rule(cfg, u, cur);
    u = std::move(cur);
    trace.steps.push_back(make_step(n + 1, 0, E, u, clock));
    if (stop) {
      trace.status = Status::converged;
      return trace;
    }
  }
  trace.status = Status::max_iters;
  return trace;
}

ConvexityCheck strengthened_convexity(const ConvexFn& E, const Decomposition& d, double tau, std::uint64_t seed,
                                      int samples)
{
  Rng rng(mix_seed(seed, 0xc0));
  ConvexityCheck out;
  const int J = d.size();
  for (int s = 0; s < samples; ++s) {
    const Vector v = rng.normal_vector(d.dim());
    Vector combined = v;
    double lhs = (1.0 - tau * J) * eval(E, v);
    for (int j = 0; j < J; ++j) {
      const Vector w = d.injection_matrix(j) * rng.normal_vector(d.block_size(j));
      lhs = ext_add(lhs, tau * eval(E, v + w));
      combined += tau * w;
    }
    const double rhs = eval(E, combined);
    if (!std::isfinite(lhs) || !std::isfinite(rhs)) { continue; }
    const double viol = rhs - lhs;
    if (viol > 1e-9 * (1.0 + std::abs(lhs) + std::abs(rhs))) { out.holds = false; }
    out.worst_violation = std::max(out.worst_violation, viol);
  }
  return out;
}

} // namespace dualkit
