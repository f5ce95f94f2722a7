#include "doctest.h"

#include <cmath>

#include "dualkit/admm.hpp"
#include "dualkit/problems.hpp"
#include "oracles.hpp"

using namespace dualkit;
using oracle::sharing_start;
using oracle::SharingStart;

namespace {

SolverConfig iters(int n, double tau = 1.0)
{
  SolverConfig cfg;
  cfg.max_iters = n;
  cfg.tau = tau;
  return cfg;
}

Blocks zeros_like(const ConstrainedProblem& P)
{
  Blocks u;
  for (int j = 0; j < P.size(); ++j) { u.push_back(Vector::Zero(P.block_dim(j))); }
  return u;
}

} // namespace

TEST_CASE("multi-block ADMM variants reach the KKT point on well-conditioned quadratics")
{
  const LocalSolver ls;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const ConstrainedProblem P = random_constrained(seed, 3, 2, 2, 4.0, 1.0);
    const oracle::Kkt ref = oracle::constrained_kkt(P);
    CAPTURE(seed);
    const Trace sym = admm_symmetrized(P, ls, iters(4000), zeros_like(P), Vector::Zero(2));
    CHECK(oracle::block_distance(sym.last().blocks("u"), ref.u) < 1e-6);
    CHECK((sym.last().var("lambda") - ref.lambda).norm() < 1e-6);
    SolverConfig rc = iters(4000);
    rc.seed = seed;
    const Trace rnd = admm_random_permuted(P, ls, rc, zeros_like(P), Vector::Zero(2));
    CHECK(oracle::block_distance(rnd.last().blocks("u"), ref.u) < 1e-6);
    CHECK(rnd.last().permutation.size() == 3);
  }
}

TEST_CASE("plain ADMM converges on a two-block split")
{
  const LocalSolver ls;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const ConstrainedProblem P = random_two_block(seed, 3, 2, 5.0);
    const oracle::Kkt ref = oracle::constrained_kkt(P);
    CAPTURE(seed);
    const Trace t = admm_plain(P, ls, iters(3000), zeros_like(P), Vector::Zero(2));
    CHECK(oracle::block_distance(t.last().blocks("u"), ref.u) < 1e-6);
    const Trace tb = admm_two_block(P, ls, iters(3000), Vector::Zero(3), Vector::Zero(2), Vector::Zero(2));
    CHECK((tb.last().var("u1") - ref.u[0]).norm() < 1e-6);
    CHECK((tb.last().var("u2") - ref.u[1]).norm() < 1e-6);
  }
}

TEST_CASE("ALM reaches the KKT point of a one-block problem")
{
  const LocalSolver ls;
  const ConstrainedProblem P = random_constrained(3, 1, 4, 2, 5.0, 2.0);
  const oracle::Kkt ref = oracle::constrained_kkt(P);
  const Trace t = alm(P, ls, iters(500), Vector::Zero(4), Vector::Zero(2));
  CHECK((t.last().var("u") - ref.u[0]).norm() < 1e-6);
  CHECK((t.last().var("lambda") - ref.lambda).norm() < 1e-6);
  CHECK(t.last().metrics.at("constraint") < 1e-6);
}

TEST_CASE("dualization-based ADMM reaches the sharing minimizer")
{
  const LocalSolver ls;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const SharingProblem P = random_sharing(seed, 3, 2, 3, 4.0, 1.0);
    const auto ref = oracle::sharing_solution(P);
    const SharingStart st = sharing_start(P, oracle::zero_blocks(P));
    CAPTURE(seed);
    const Trace t = admm_dualization_based(P, ls, iters(4000, kDualizationTau), st.v, st.lambda);
    CHECK(oracle::block_distance(t.last().blocks("u_hat"), ref) < 1e-6);
    CHECK(t.last().metrics.at("coupling") < 1e-9);
    const Trace tp = admm_dualization_parallel(P, ls, iters(8000, 1.0 / 3.0), st.v, st.lambda);
    CHECK(oracle::block_distance(tp.last().blocks("u"), ref) < 1e-6);
  }
}

TEST_CASE("dualization-based ADMM keeps the coupling invariant")
{
  const LocalSolver ls;
  const SharingProblem P = random_sharing(2, 3, 2, 3, 4.0);
  const SharingStart st = sharing_start(P, oracle::zero_blocks(P));
  const Trace t = admm_dualization_based(P, ls, iters(50, 0.7), st.v, st.lambda);
  for (const auto* s : t.iterates()) { CHECK(s->metrics.at("coupling") < 1e-10); }
  CHECK_THROWS_AS(admm_dualization_based(P, ls, iters(5, 1.5), st.v, st.lambda), Error);
}

TEST_CASE("Uzawa smoother reports on three-block quadratics")
{
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ConstrainedProblem P = random_constrained(seed, 3, 2, 3, 10.0, 1.0);
    const QuadraticSaddle S = assemble_saddle(P);
    CAPTURE(seed);
    const UzawaReport plain = uzawa_check_quadratic(P, plain_smoother(S, P.beta));
    CHECK_FALSE(plain.symmetric);
    CHECK_FALSE(plain.guaranteed);
    const UzawaReport sym = uzawa_check_quadratic(P, symmetrized_smoother(S, P.beta));
    CHECK(sym.symmetric);
    CHECK(sym.min_eig_primal >= -1e-10);
    CHECK(sym.min_eig_dual >= -1e-10);
    CHECK(sym.guaranteed);
    // The averaged Gauss-Seidel smoother is symmetric, but R_V exceeds Ã_β⁻¹ along some direction.
    const UzawaReport rnd = uzawa_check_quadratic(P, random_smoother(S, P.beta));
    CHECK(rnd.symmetric);
    CHECK(rnd.min_eig_primal < 0.0);
    CHECK_FALSE(rnd.guaranteed);
  }
}

TEST_CASE("averaged smoother on two coupled unknowns")
{
  // A = [[1, a], [a, 1]] gives R_V = [[1, −a/2], [−a/2, 1]], and R_V·A has eigenvalue 1 − a²/2 + a/2 > 1.
  const double a = 0.5;
  ConstrainedProblem P;
  P.beta = 1.0;
  Matrix B1(1, 1), B2(1, 1);
  B1 << std::sqrt(a);
  B2 << std::sqrt(a);
  const double d = 1.0 - a;
  P.blocks.push_back({ConvexFn::quadratic(Matrix::Constant(1, 1, d), Vector::Zero(1)), LinOp::dense(B1)});
  P.blocks.push_back({ConvexFn::quadratic(Matrix::Constant(1, 1, d), Vector::Zero(1)), LinOp::dense(B2)});
  P.g = Vector::Zero(1);
  const QuadraticSaddle S = assemble_saddle(P);
  const UzawaSmootherPair R = random_smoother(S, P.beta);
  Matrix expect(2, 2);
  expect << 1.0, -a / 2.0, -a / 2.0, 1.0;
  CHECK((R.R_V - expect).norm() < 1e-12);
  const UzawaReport rep = uzawa_check_quadratic(P, R);
  CHECK(rep.min_eig_primal < 0.0);
}

TEST_CASE("plain three-block ADMM diverges on the CHYY example")
{
  const LocalSolver ls;
  const ConstrainedProblem P = chyy_witness();
  const Blocks u0(3, Vector::Ones(1));
  const Trace t = admm_plain(P, ls, iters(5000), u0, Vector::Zero(3));
  CHECK(t.status == Status::diverged);
  CHECK(t.last().metrics.at("constraint") > 1e6);
}

TEST_CASE("dualization-based ADMM converges on the CHYY sharing form")
{
  const LocalSolver ls;
  const SharingProblem P = chyy_sharing();
  const SharingStart st = sharing_start(P, Blocks(3, Vector::Ones(1)));
  SolverConfig cfg = iters(20000, kDualizationTau);
  cfg.stop_tol = 1e-12;
  const Trace t = admm_dualization_based(P, ls, cfg, st.v, st.lambda);
  CHECK(t.status == Status::converged);
  CHECK(oracle::block_distance(t.last().blocks("u_hat"), oracle::sharing_solution(P)) < 1e-6);
}

TEST_CASE("divergence rule limit")
{
  const LocalSolver ls;
  const ConstrainedProblem P = chyy_witness();
  const Blocks u0(3, Vector::Ones(1));
  const Trace low = admm_plain(P, ls, iters(5000), u0, Vector::Zero(3), DivergenceRule{10.0, 0});
  CHECK(low.status == Status::diverged);
  CHECK(low.iterations() < 505);
  const Trace off = admm_plain(P, ls, iters(300), u0, Vector::Zero(3), DivergenceRule{INFINITY, 0});
  CHECK(off.status == Status::max_iters);
  CHECK(off.iterations() == 300);
}

TEST_CASE("proximal point and ALM dual energy agree")
{
  const LocalSolver ls;
  const ConstrainedProblem P = random_constrained(5, 1, 3, 2, 3.0, 1.5);
  const Trace a = alm(P, ls, iters(30), Vector::Zero(3), Vector::Zero(2));
  const Trace p = proximal_point(alm_dual_energy(P), P.beta, ls, iters(30), Vector::Zero(2));
  double worst = 0.0;
  for (int n = 0; n <= 30; ++n) { worst = std::max(worst, (a.iterate(n).var("lambda") - p.iterate(n).var("p")).norm()); }
  CHECK(worst < 1e-8);
}

TEST_CASE("ADMM input validation")
{
  const LocalSolver ls;
  const ConstrainedProblem P = random_constrained(1, 2, 2, 2, 3.0);
  CHECK_THROWS(admm_plain(P, ls, iters(5), Blocks{Vector::Zero(2)}, Vector::Zero(2)));
  CHECK_THROWS(admm_plain(P, ls, iters(5), zeros_like(P), Vector::Zero(3)));
  CHECK_THROWS(alm(P, ls, iters(5), Vector::Zero(2), Vector::Zero(2)));
}
