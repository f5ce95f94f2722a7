#include "doctest.h"

#include <cmath>

#include "dualkit/duality.hpp"
#include "dualkit/rng.hpp"

using namespace dualkit;

namespace {

Trace scalar_trace(std::vector<double> xs)
{
  Trace t;
  for (std::size_t n = 0; n < xs.size(); ++n) {
    TraceStep s;
    s.iter = static_cast<int>(n);
    s.vars["x"] = {make_vector({xs[n]})};
    t.steps.push_back(s);
  }
  return t;
}

RelationSpec equal_x()
{
  RelationSpec spec;
  spec.theorem_id = "x equals x";
  spec.relations = {{"x = x", [](const TraceStep& a, const TraceStep& b) { return std::abs(a.var("x")(0) - b.var("x")(0)); }}};
  return spec;
}

// min (α/2)‖u − f‖² + ‖Du‖₁ with a dense random B
PrimalDualProblem lasso_like(Rng& rng, Index d, Index m)
{
  return PrimalDualProblem(ConvexFn::squared_distance(rng.uniform(0.5, 2.0), rng.normal_vector(d)), ConvexFn::l1(m),
                           LinOp::dense(rng.normal_matrix(m, d)));
}

} // namespace

TEST_CASE("verify_dualization compares matched iterates")
{
  const Trace a = scalar_trace({0.0, 1.0, 2.0});
  const Trace b = scalar_trace({0.0, 1.0, 2.0 + 1e-9});
  const DualizationReport rep = verify_dualization(a, b, equal_x(), 1e-8);
  CHECK(rep.pass);
  CHECK(rep.iterations == 2);
  CHECK(rep.residuals.size() == 2);
  CHECK(rep.max_residual == doctest::Approx(1e-9).epsilon(1e-3));
  CHECK_FALSE(verify_dualization(a, b, equal_x(), 1e-10).pass);
  CHECK(rep.to_json().at("theorem_id") == "x equals x");
}

TEST_CASE("verify_dualization rejects mismatched runs")
{
  CHECK_THROWS_AS(verify_dualization(scalar_trace({0, 1}), scalar_trace({0, 1, 2}), equal_x(), 1.0), Error);
  CHECK_THROWS_AS(verify_dualization(scalar_trace({0}), scalar_trace({0}), equal_x(), 1.0), Error);
  // the hypothesis is checked at n = 0
  CHECK_THROWS_AS(verify_dualization(scalar_trace({0, 1}), scalar_trace({0.5, 1}), equal_x(), 1.0), Error);
}

TEST_CASE("tolerance zero fails on any rounding")
{
  const DualizationReport rep = verify_dualization(scalar_trace({0, 0.1 + 0.2}), scalar_trace({0, 0.3}), equal_x(), 0.0);
  CHECK_FALSE(rep.pass);
}

TEST_CASE("weak duality: the gap is nonnegative")
{
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const Index d = rng.between(1, 6), m = rng.between(1, 6);
    const PrimalDualProblem P = lasso_like(rng, d, m);
    const Vector u = rng.normal_vector(d);
    const Vector p = rng.uniform_vector(m, -1.0, 1.0);
    CHECK(duality_gap(P, u, p) >= -1e-12);
  }
}

TEST_CASE("dual of the dual is the primal")
{
  Rng rng(5);
  const PrimalDualProblem P = lasso_like(rng, 3, 4);
  const PrimalDualProblem DD = dual_problem(dual_problem(P));
  for (int trial = 0; trial < 20; ++trial) {
    const Vector u = rng.normal_vector(3);
    CHECK(primal_value(DD, u) == doctest::Approx(primal_value(P, u)));
  }
}

TEST_CASE("recovery closes the gap at the dual optimum")
{
  // F = ½‖u − f‖², G = indicator of {0}: min at u with Bu = 0; dual optimum p solves BBᵗp = Bf
  Rng rng(2);
  const Matrix B = rng.normal_matrix(2, 4);
  const Vector f = rng.normal_vector(4);
  const PrimalDualProblem P(ConvexFn::squared_distance(1.0, f), ConvexFn::indicator(ConvexSet::point(Vector::Zero(2))),
                            LinOp::dense(B));
  const Vector p = (B * B.transpose()).ldlt().solve(B * f);
  const Vector u = recover_primal(P, p);
  CHECK((B * u).norm() < 1e-12);
  CHECK(std::abs(duality_gap(P, u, p)) < 1e-12);
  CHECK_THROWS_AS(recover_primal(PrimalDualProblem(ConvexFn::l1(4), ConvexFn::l1(2), LinOp::dense(B)), p), Error);
}

TEST_CASE("error-transfer bound dominates the primal error")
{
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const PrimalDualProblem P = lasso_like(rng, 4, 3);
    const double mu = P.F().strong_convexity();
    const Vector p_star = rng.uniform_vector(3, -1, 1), p = rng.uniform_vector(3, -1, 1);
    const double err = (recover_primal(P, p) - recover_primal(P, p_star)).norm();
    CHECK(err <= error_transfer_bound(P, p, p_star, mu) + 1e-12);
  }
}
