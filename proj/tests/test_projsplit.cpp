#include "doctest.h"

#include <cmath>

#include "dualkit/problems.hpp"
#include "dualkit/projsplit.hpp"
#include "dualkit/rng.hpp"
#include "oracles.hpp"

using namespace dualkit;
using oracle::QuadraticSplit;
using oracle::random_split;
using oracle::spd;

namespace {

SolverConfig iters(int n, double tau = 1.0)
{
  SolverConfig cfg;
  cfg.max_iters = n;
  cfg.tau = tau;
  return cfg;
}

// Zero dual start: u⁰ = ∇F*(0) = c, v⁰ = 0.
Blocks zero_shifts(const MultiConvexProblem& P) { return Blocks(static_cast<std::size_t>(P.size()), Vector::Zero(P.dim())); }

} // namespace

TEST_CASE("von Neumann on two lines reaches their crossing")
{
  const PocsProblem P = two_lines();
  const Trace t = von_neumann(P, iters(200));
  CHECK((t.last().var("u") - make_vector({1.0, 1.0})).norm() < 1e-8);
  CHECK(t.last().metrics.at("infeasibility") < 1e-8);
}

TEST_CASE("Dykstra matches the box and halfspace oracle")
{
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const PocsProblem P = box_halfspace(seed, 4);
    const auto& box = P.sets[0];
    const auto& half = P.sets[1];
    const Vector ref = oracle::project_box_halfspace(P.f, box.lower(), box.upper(), half.normal(), half.level());
    const Trace t = dykstra(P, iters(3000));
    CAPTURE(seed);
    CHECK((t.last().var("u") - ref).norm() < 1e-6);
  }
}

TEST_CASE("Dykstra matches the two-affine oracle and follows von Neumann on affine sets")
{
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const PocsProblem P = random_affine_pocs(seed, 5, 2);
    const Vector ref = oracle::project_affine_intersection(P.f, *P.common_point, {P.sets[0].basis(), P.sets[1].basis()});
    const Trace d = dykstra(P, iters(5000));
    const Trace v = von_neumann(P, iters(5000));
    CAPTURE(seed);
    CHECK((d.last().var("u") - ref).norm() < 1e-6);
    CHECK((v.last().var("u") - ref).norm() < 1e-6);
    double gap = 0.0;
    for (int n = 0; n <= 5000; ++n) { gap = std::max(gap, (d.iterate(n).var("u") - v.iterate(n).var("u")).norm()); }
    CHECK(gap < 1e-10);
  }
}

TEST_CASE("parallel projections reach the intersection")
{
  const PocsProblem P = random_affine_pocs(3, 4, 3);
  const Vector ref = oracle::project_affine_intersection(
      P.f, *P.common_point, {P.sets[0].basis(), P.sets[1].basis(), P.sets[2].basis()});
  CHECK((parallel_dykstra(P, iters(4000, 1.0 / 3.0)).last().var("u") - ref).norm() < 1e-6);
  const PocsProblem B = box_halfspace(7, 3);
  const Vector bref =
      oracle::project_box_halfspace(B.f, B.sets[0].lower(), B.sets[0].upper(), B.sets[1].normal(), B.sets[1].level());
  CHECK((parallel_dykstra(B, iters(6000, 0.5)).last().var("u") - bref).norm() < 1e-6);
  // von Neumann only finds a feasible point in general
  CHECK(parallel_von_neumann(B, iters(3000, 0.5)).last().metrics.at("infeasibility") < 1e-6);
}

TEST_CASE("projection runs reject malformed input")
{
  PocsProblem P = two_lines();
  P.f = Vector::Zero(3);
  CHECK_THROWS_AS(von_neumann(P, iters(5)), DimensionError);
  PocsProblem empty;
  empty.f = Vector::Zero(2);
  CHECK_THROWS_AS(dykstra(empty, iters(5)), Error);
  PocsProblem bad = two_lines();
  bad.common_point = make_vector({0.0, 5.0});
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("Kaczmarz solves a consistent system")
{
  Rng rng(11);
  const Matrix A = rng.normal_matrix(4, 4) + 4.0 * Matrix::Identity(4, 4);
  const Vector x = rng.normal_vector(4);
  const Trace t = kaczmarz(A, A * x, iters(500));
  CHECK((t.last().var("u") - x).norm() < 1e-8);
}

TEST_CASE("linear PR converges to the direct solution")
{
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const MultiLinearProblem P = random_multilinear(seed, 5, 3, 10.0);
    const Trace t = pr_linear(P, iters(2000));
    CAPTURE(seed);
    CHECK((t.last().var("u") - P.solve()).norm() < 1e-6);
  }
}

TEST_CASE("splitting methods converge to the minimizer")
{
  const LocalSolver ls;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const QuadraticSplit Q = random_split(seed, 4, 3);
    const MultiConvexProblem P = Q.problem();
    const Vector ref = Q.minimizer();
    CAPTURE(seed);
    CHECK((generalized_pr(P, ls, iters(3000), Q.c, zero_shifts(P)).last().var("u") - ref).norm() < 1e-6);
    CHECK((generalized_dr(P, ls, iters(3000, 0.5), Q.c, zero_shifts(P)).last().var("u") - ref).norm() < 1e-6);
    CHECK((parallel_dr(P, ls, iters(6000, 1.0 / 3.0), Q.c, zero_shifts(P)).last().var("u") - ref).norm() < 1e-6);
  }
}

TEST_CASE("generalized PR with two terms is the classical Peaceman-Rachford recursion")
{
  const LocalSolver ls;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed + 100);
    const Index d = 4;
    oracle::ClassicalSplitting C{spd(rng, d), spd(rng, d), rng.normal_vector(d), rng.normal_vector(d)};
    MultiConvexProblem P{ConvexFn::squared_distance(2.0, Vector::Zero(d)),
                         {{ConvexFn::quadratic(C.A1, C.b1), LinOp::identity(d)},
                          {ConvexFn::quadratic(C.A2, C.b2), LinOp::identity(d)}}};
    const Blocks v0{rng.normal_vector(d), rng.normal_vector(d)};
    const Vector u0 = 0.5 * (v0[0] + v0[1]);
    const Trace t = generalized_pr(P, ls, iters(50), u0, v0);
    const auto ref = C.run(2.0 * u0 - v0[0], 50);
    double worst = 0.0;
    for (int n = 0; n <= 50; ++n) {
      const auto& s = t.iterate(n);
      const Vector v = 2.0 * s.var("u") - s.var("v", 0);
      worst = std::max(worst, (v - ref[static_cast<std::size_t>(n)]).norm() / (1.0 + ref[static_cast<std::size_t>(n)].norm()));
      if (n > 0) {
        const Vector u = C.primal(ref[static_cast<std::size_t>(n - 1)]);
        worst = std::max(worst, (s.var("u") - u).norm() / (1.0 + u.norm()));
      }
    }
    CAPTURE(seed);
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("generalized DR with two terms is the relaxed classical recursion")
{
  const LocalSolver ls;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed + 200);
    const Index d = 3;
    const double tau = rng.uniform(0.3, 1.0);
    oracle::ClassicalSplitting C{spd(rng, d), spd(rng, d), rng.normal_vector(d), rng.normal_vector(d)};
    MultiConvexProblem P{ConvexFn::squared_distance(2.0, Vector::Zero(d)),
                         {{ConvexFn::quadratic(C.A1, C.b1), LinOp::identity(d)},
                          {ConvexFn::quadratic(C.A2, C.b2), LinOp::identity(d)}}};
    const Blocks v0{rng.normal_vector(d), rng.normal_vector(d)};
    const Trace t = generalized_dr(P, ls, iters(50, tau), 0.5 * (v0[0] + v0[1]), v0);
    const auto ref = C.run(v0[1], 50, tau);
    double worst = 0.0;
    for (int n = 0; n <= 50; ++n) {
      const auto& s = t.iterate(n);
      const Vector& r = ref[static_cast<std::size_t>(n)];
      worst = std::max(worst, (s.var("v", 1) - r).norm() / (1.0 + r.norm()));
      worst = std::max(worst, (s.var("u") - 0.5 * (s.var("v", 0) + s.var("v", 1))).norm());
      if (n > 0) {
        const Vector hat = C.reflect(ref[static_cast<std::size_t>(n - 1)]);
        worst = std::max(worst, (s.var("v_hat", 1) - hat).norm() / (1.0 + hat.norm()));
      }
    }
    CAPTURE(seed);
    CAPTURE(tau);
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("splitting runs validate their input")
{
  const LocalSolver ls;
  const QuadraticSplit Q = random_split(1, 3, 2);
  const MultiConvexProblem P = Q.problem();
  CHECK_THROWS_AS(generalized_dr(P, ls, iters(5, 1.5), Q.c, zero_shifts(P)), Error);
  CHECK_THROWS_AS(generalized_dr(P, ls, iters(5, 0.0), Q.c, zero_shifts(P)), Error);
  CHECK_THROWS(generalized_pr(P, ls, iters(5), Q.c, Blocks{Vector::Zero(3)}));
  CHECK_THROWS(generalized_pr(P, ls, iters(5), Vector::Zero(2), zero_shifts(P)));
}

TEST_CASE("matched start satisfies the primal-dual link")
{
  const QuadraticSplit Q = random_split(4, 3, 2);
  const MultiConvexProblem P = Q.problem();
  Rng rng(9);
  Blocks p0;
  Vector s = Vector::Zero(3);
  for (const auto& M : Q.M) {
    p0.push_back(rng.normal_vector(M.rows()));
    s -= M.transpose() * p0.back();
  }
  const SplittingStart st = matched_start(P, p0);
  CHECK((st.u0 - (Q.c + s / Q.alpha)).norm() < 1e-12);
  for (std::size_t j = 0; j < p0.size(); ++j) { CHECK((st.v0[j] + Q.M[j].transpose() * p0[j]).norm() < 1e-12); }
}
