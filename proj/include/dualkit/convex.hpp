#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dualkit/linops.hpp"

namespace dualkit {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
inline constexpr double kMembershipTol = 1e-12;

// Inf-addition: +∞ absorbs everything, including −∞.
double ext_add(double a, double b);

class ConvexSet {
public:
  enum class Kind { box, halfspace, affine, linf_ball, simplex };

  static ConvexSet box(Vector lo, Vector hi);
  // {x : (a, x) <= b}
  static ConvexSet halfspace(Vector a, double b);
  // offset + span(columns of basis); zero columns gives a single point
  static ConvexSet affine(const Matrix& basis, Vector offset);
  static ConvexSet point(Vector x);
  static ConvexSet linf_ball(Index dim, double radius);
  static ConvexSet simplex(Index k);

  Kind kind() const { return kind_; }
  Index dim() const { return dim_; }

  Vector project(const Vector& v) const;
  bool contains(const Vector& v, double tol = kMembershipTol) const;
  double support(const Vector& p) const;

  const Vector& lower() const { return lo_; }
  const Vector& upper() const { return hi_; }
  const Vector& normal() const { return a_; }
  double level() const { return b_; }
  double radius() const { return radius_; }
  // affine sets: orthonormal basis of M, of M⊥, and the offset ū
  const Matrix& basis() const { return q_; }
  Matrix complement_basis() const;
  const Vector& offset() const { return offset_; }

  std::string describe() const;

private:
  Kind kind_ = Kind::box;
  Index dim_ = 0;
  Vector lo_, hi_, a_, offset_;
  Matrix q_;
  double b_ = 0.0;
  double radius_ = 0.0;
};

namespace detail {
struct FnNode;
}

struct Composite;

// ½(Au,u) − (f,u) + c
struct QuadraticForm {
  Matrix A;
  Vector f;
  double c = 0.0;
};

class ConvexFn {
public:
  enum class Kind {
    quadratic,
    squared_distance,
    l1,
    indicator,
    support,
    log_sum_exp,
    neg_entropy,
    linear,
    precompose,
    sum,
    block_separable,
    translate,
    tilt,
    scale,
  };

  // ½(Au,u) − (f,u) + c
  static ConvexFn quadratic(Matrix A, Vector f, double c = 0.0);
  // (α/2)‖u − center‖² + c
  static ConvexFn squared_distance(double alpha, Vector center, double c = 0.0);
  static ConvexFn l1(Index dim, double weight = 1.0);
  static ConvexFn indicator(ConvexSet set);
  static ConvexFn support(ConvexSet set);
  static ConvexFn log_sum_exp(Index k);
  // Σ p log p on the simplex, +∞ elsewhere
  static ConvexFn neg_entropy(Index k);
  static ConvexFn linear(Vector c);
  static ConvexFn zero(Index dim);
  // inner(op·u + shift)
  static ConvexFn precompose(ConvexFn inner, LinOp op, std::optional<Vector> shift = std::nullopt);
  static ConvexFn sum(std::vector<ConvexFn> terms);
  // Σ_j F_j(u_j) over consecutive coordinate blocks
  static ConvexFn block_separable(std::vector<ConvexFn> blocks);
  // F(u − c)
  static ConvexFn translate(ConvexFn inner, Vector c);
  // F(u) + (a,u) + c0
  static ConvexFn tilt(ConvexFn inner, Vector a, double c0 = 0.0);
  // λ·F
  static ConvexFn scale(ConvexFn inner, double lambda);

  Kind kind() const;
  Index dim() const;
  const std::vector<ConvexFn>& parts() const;
  const ConvexSet& set() const;
  const LinOp& op() const;
  std::vector<Index> block_offsets() const;
  double l1_weight() const;
  double scale_factor() const;
  std::string describe() const;

  // Strong convexity modulus and smoothness constant (declared or derived per kind).
  double strong_convexity() const;
  std::optional<double> smoothness() const;
  ConvexFn with_moduli(double mu, std::optional<double> L) const;

private:
  friend struct detail::FnNode;
  explicit ConvexFn(std::shared_ptr<const detail::FnNode> node);
  const detail::FnNode& node() const { return *node_; }
  std::shared_ptr<const detail::FnNode> node_;
  std::optional<double> mu_;
  std::optional<double> lip_;

  friend double eval(const ConvexFn&, const Vector&);
  friend Vector grad(const ConvexFn&, const Vector&);
  friend Matrix hessian(const ConvexFn&, const Vector&);
  friend Vector prox(const ConvexFn&, const Vector&, double);
  friend ConvexFn conjugate(const ConvexFn&);
  friend std::optional<QuadraticForm> as_quadratic(const ConvexFn&);
  friend bool is_differentiable(const ConvexFn&);
  friend bool has_prox(const ConvexFn&);
  friend Vector grad_conjugate(const ConvexFn&, const Vector&);
  friend std::optional<ConvexFn> restrict_to_block(const ConvexFn&, Index, Index);
  friend void flatten_into(const ConvexFn&, const Matrix&, const Vector&, Composite&);
};

double eval(const ConvexFn& F, const Vector& u);
Vector grad(const ConvexFn& F, const Vector& u);
Matrix hessian(const ConvexFn& F, const Vector& u);
// argmin_u ½‖u − v‖² + t·F(u)
Vector prox(const ConvexFn& F, const Vector& v, double t);
ConvexFn conjugate(const ConvexFn& F);
// v − t·prox(F, v/t, 1/t) = prox of t·F*
Vector prox_conjugate_via_moreau(const ConvexFn& F, const Vector& v, double t);
double bregman(const ConvexFn& F, const Vector& u, const Vector& v);
// F(u) + F*(p) − (p,u)
double fenchel_young_residual(const ConvexFn& F, const Vector& u, const Vector& p);
// ∇F*(p); uses the symbolic conjugate, or ∇F(u) = p solved by a prox step for G + (μ/2)‖·−c‖²
Vector grad_conjugate(const ConvexFn& F, const Vector& p);

std::optional<QuadraticForm> as_quadratic(const ConvexFn& F);
bool is_differentiable(const ConvexFn& F);
bool has_prox(const ConvexFn& F);

// Restriction of a coordinate-separable function to the block [offset, offset + size).
std::optional<ConvexFn> restrict_to_block(const ConvexFn& F, Index offset, Index size);

// G(M·w + s)
struct CompositeTerm {
  ConvexFn G;
  Matrix M;
  Vector s;
};

// ½(Hw,w) − (h,w) + c + Σ G_i(M_i·w + s_i); quadratic pieces are merged into H, h, c.
struct Composite {
  Matrix H;
  Vector h;
  double c = 0.0;
  std::vector<CompositeTerm> terms;

  double value(const Vector& w) const;
};

// The map w ↦ F(M·w + s) in composite form.
Composite flatten(const ConvexFn& F, const Matrix& M, const Vector& s);
void flatten_into(const ConvexFn& F, const Matrix& M, const Vector& s, Composite& out);

// argmin ½‖p − w‖² + s Σ p log p over the simplex (safeguarded Newton on the multiplier)
Vector entropy_prox(const Vector& w, double s);

} // namespace dualkit
