#include "doctest.h"

#include <cmath>

#include "convex_suite.hpp"
#include "dualkit/convex.hpp"

using namespace dualkit;

TEST_CASE("property suite: every function kind")
{
  for (const auto& [kind, rep] : suite::run(2024, 100)) {
    CAPTURE(kind);
    CHECK(rep.samples == 100);
    CHECK(rep.checks >= 200);
    for (const auto& f : rep.failures) { FAIL_CHECK(f); }
  }
}

TEST_CASE("l1 prox is soft thresholding")
{
  const ConvexFn F = ConvexFn::l1(4, 0.5);
  const Vector v = make_vector({2.0, -0.3, 0.5, -1.5});
  const Vector expected = make_vector({1.0, 0.0, 0.0, -0.5});
  CHECK((prox(F, v, 2.0) - expected).norm() < 1e-15);
}

TEST_CASE("projections onto sets")
{
  const ConvexSet box = ConvexSet::box(make_vector({-1, -1}), make_vector({1, 2}));
  CHECK((box.project(make_vector({3, -4})) - make_vector({1, -1})).norm() == 0.0);
  const ConvexSet h = ConvexSet::halfspace(make_vector({1, 1}), 1.0);
  CHECK((h.project(make_vector({2, 2})) - make_vector({0.5, 0.5})).norm() < 1e-15);
  CHECK(h.contains(make_vector({0, 0})));
  Matrix dir(2, 1);
  dir << 1, 1;
  const ConvexSet line = ConvexSet::affine(dir, make_vector({1, 0}));
  const Vector p = line.project(make_vector({0, 1}));
  CHECK((p - make_vector({1, 0})).norm() < 1e-12);
  CHECK(ConvexSet::simplex(3).contains(make_vector({0.2, 0.3, 0.5})));
  CHECK(std::abs(box.support(make_vector({1, -1})) - 2.0) < 1e-15);
}

TEST_CASE("conjugate pairs")
{
  CHECK(conjugate(ConvexFn::log_sum_exp(3)).kind() == ConvexFn::Kind::neg_entropy);
  CHECK(conjugate(ConvexFn::l1(2)).kind() == ConvexFn::Kind::indicator);
  // LSE*(p) = Σ p log p on the simplex
  const Vector p = make_vector({0.2, 0.3, 0.5});
  const double expected = 0.2 * std::log(0.2) + 0.3 * std::log(0.3) + 0.5 * std::log(0.5);
  CHECK(std::abs(eval(conjugate(ConvexFn::log_sum_exp(3)), p) - expected) < 1e-14);
  CHECK(eval(ConvexFn::neg_entropy(3), make_vector({0.5, 0.6, -0.1})) == kInfinity);
  CHECK_THROWS_AS(conjugate(ConvexFn::sum({ConvexFn::l1(2), ConvexFn::log_sum_exp(2)})), Error);
}

TEST_CASE("grad_conjugate inverts the gradient of strongly convex functions")
{
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const Index d = rng.between(1, 5);
    const ConvexFn F = ConvexFn::tilt(ConvexFn::squared_distance(rng.uniform(0.5, 2.0), rng.normal_vector(d)),
                                      rng.normal_vector(d));
    const Vector u = rng.normal_vector(d);
    CHECK((grad_conjugate(F, grad(F, u)) - u).norm() < 1e-10);
    const Vector c = rng.normal_vector(d);
    const ConvexFn G = ConvexFn::sum({ConvexFn::squared_distance(1.5, c), ConvexFn::l1(d)});
    const Vector p = 2.0 * rng.normal_vector(d);
    const Vector x = grad_conjugate(G, p);
    // p − 1.5(x − c) must be a subgradient of ‖·‖₁ at x
    const Vector s = p - 1.5 * (x - c);
    for (Index i = 0; i < d; ++i) {
      if (x(i) != 0.0) {
        CHECK(std::abs(s(i) - (x(i) > 0 ? 1.0 : -1.0)) < 1e-10);
      } else {
        CHECK(std::abs(s(i)) <= 1.0 + 1e-12);
      }
    }
  }
}

TEST_CASE("strong convexity and smoothness metadata")
{
  CHECK(ConvexFn::squared_distance(3.0, Vector::Zero(2)).strong_convexity() == 3.0);
  CHECK(ConvexFn::l1(2).strong_convexity() == 0.0);
  Matrix A(2, 2);
  A << 2, 0, 0, 5;
  const ConvexFn Q = ConvexFn::quadratic(A, Vector::Zero(2));
  CHECK(std::abs(Q.strong_convexity() - 2.0) < 1e-12);
  CHECK(std::abs(*Q.smoothness() - 5.0) < 1e-12);
  CHECK(ConvexFn::tilt(Q, make_vector({1, 1})).strong_convexity() == doctest::Approx(2.0));
  CHECK(ConvexFn::scale(Q, 2.0).strong_convexity() == doctest::Approx(4.0));
}

TEST_CASE("entropy prox lands on the simplex")
{
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Vector w = 3.0 * rng.normal_vector(rng.between(2, 6));
    const double s = rng.uniform(0.01, 5.0);
    const Vector p = entropy_prox(w, s);
    CHECK(std::abs(p.sum() - 1.0) < 1e-12);
    CHECK(p.minCoeff() > 0.0);
    // optimality: p − w + s(1 + log p) is constant
    const Vector r = (p - w).array() + s * (1.0 + p.array().log());
    CHECK(r.maxCoeff() - r.minCoeff() < 1e-9 * (1.0 + w.norm()));
  }
}

TEST_CASE("input validation")
{
  CHECK_THROWS_AS(ConvexFn::quadratic(-Matrix::Identity(2, 2), Vector::Zero(2)), Error);
  CHECK_THROWS_AS(ConvexFn::squared_distance(0.0, Vector::Zero(2)), Error);
  CHECK_THROWS_AS(eval(ConvexFn::l1(2), Vector::Zero(3)), DimensionError);
  CHECK_THROWS_AS(ConvexSet::box(make_vector({1}), make_vector({0})), Error);
  CHECK_THROWS_AS(prox(ConvexFn::l1(2), Vector::Zero(2), -1.0), Error);
  CHECK(ext_add(kInfinity, -kInfinity) == kInfinity);
}
