#include "dualkit/convex.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

namespace dualkit {

double ext_add(double a, double b)
{
  if (a == kInfinity || b == kInfinity) { return kInfinity; }
  return a + b;
}

// ---------------------------------------------------------------- sets

ConvexSet ConvexSet::box(Vector lo, Vector hi)
{
  if (lo.size() != hi.size() || lo.size() < 1) { throw DimensionError("box: bound dimensions differ"); }
  for (Index i = 0; i < lo.size(); ++i) {
    if (std::isnan(lo[i]) || std::isnan(hi[i]) || lo[i] > hi[i]) { throw Error("box: empty or invalid bounds"); }
  }
  ConvexSet s;
  s.kind_ = Kind::box;
  s.dim_ = lo.size();
  s.lo_ = std::move(lo);
  s.hi_ = std::move(hi);
  return s;
}

ConvexSet ConvexSet::halfspace(Vector a, double b)
{
  require_finite(a, "halfspace normal");
  if (a.norm() == 0.0) { throw Error("halfspace: zero normal"); }
  ConvexSet s;
  s.kind_ = Kind::halfspace;
  s.dim_ = a.size();
  s.a_ = std::move(a);
  s.b_ = b;
  return s;
}

ConvexSet ConvexSet::affine(const Matrix& basis, Vector offset)
{
  require_finite(offset, "affine offset");
  if (basis.rows() != offset.size()) { throw DimensionError("affine: basis rows differ from offset dimension"); }
  ConvexSet s;
  s.kind_ = Kind::affine;
  s.dim_ = offset.size();
  s.q_ = orthonormal_basis(basis);
  s.offset_ = std::move(offset);
  return s;
}

ConvexSet ConvexSet::point(Vector x)
{
  const Index n = x.size();
  return affine(Matrix(n, 0), std::move(x));
}

ConvexSet ConvexSet::linf_ball(Index dim, double radius)
{
  if (dim < 1 || !(radius > 0.0)) { throw Error("linf_ball: need dim >= 1 and radius > 0"); }
  ConvexSet s;
  s.kind_ = Kind::linf_ball;
  s.dim_ = dim;
  s.radius_ = radius;
  return s;
}

ConvexSet ConvexSet::simplex(Index k)
{
  if (k < 1) { throw Error("simplex: need k >= 1"); }
  ConvexSet s;
  s.kind_ = Kind::simplex;
  s.dim_ = k;
  return s;
}

Matrix ConvexSet::complement_basis() const
{
  if (kind_ != Kind::affine) { throw Error("complement_basis: set is not affine"); }
  return orthogonal_complement(q_, dim_);
}

namespace {

Vector project_simplex(const Vector& v)
{
  std::vector<double> s(v.data(), v.data() + v.size());
  std::sort(s.begin(), s.end(), std::greater<>());
  double cum = 0.0;
  double theta = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    cum += s[i];
    const double t = (cum - 1.0) / static_cast<double>(i + 1);
    if (s[i] - t > 0.0) { theta = t; }
  }
  return (v.array() - theta).max(0.0).matrix();
}

} // namespace

Vector ConvexSet::project(const Vector& v) const
{
  require_dim(v, dim_, "ConvexSet::project");
  switch (kind_) {
  case Kind::box: return v.cwiseMax(lo_).cwiseMin(hi_);
  case Kind::halfspace: {
    const double excess = a_.dot(v) - b_;
    if (excess <= 0.0) { return v; }
    return v - (excess / a_.squaredNorm()) * a_;
  }
  case Kind::affine: {
    if (q_.cols() == 0) { return offset_; }
    return offset_ + q_ * (q_.transpose() * (v - offset_));
  }
  case Kind::linf_ball: return v.cwiseMax(-radius_).cwiseMin(radius_);
  case Kind::simplex: return project_simplex(v);
  }
  throw Error("ConvexSet::project: unknown kind");
}

bool ConvexSet::contains(const Vector& v, double tol) const
{
  require_dim(v, dim_, "ConvexSet::contains");
  switch (kind_) {
  case Kind::box: return ((v - lo_).array() >= -tol).all() && ((hi_ - v).array() >= -tol).all();
  case Kind::halfspace: return a_.dot(v) <= b_ + tol;
  case Kind::affine: {
    Vector r = v - offset_;
    if (q_.cols() > 0) { r -= q_ * (q_.transpose() * r); }
    return r.norm() <= tol;
  }
  case Kind::linf_ball: return v.cwiseAbs().maxCoeff() <= radius_ + tol;
  case Kind::simplex: return (v.array() >= -tol).all() && std::abs(v.sum() - 1.0) <= tol;
  }
  return false;
}

double ConvexSet::support(const Vector& p) const
{
  require_dim(p, dim_, "ConvexSet::support");
  const double cone_tol = kMembershipTol * (1.0 + p.norm());
  switch (kind_) {
  case Kind::box: {
    double s = 0.0;
    for (Index i = 0; i < dim_; ++i) {
      if (p[i] > 0.0) {
        if (hi_[i] == kInfinity) { return kInfinity; }
        s += p[i] * hi_[i];
      } else if (p[i] < 0.0) {
        if (lo_[i] == -kInfinity) { return kInfinity; }
        s += p[i] * lo_[i];
      }
    }
    return s;
  }
  case Kind::halfspace: {
    const double lambda = a_.dot(p) / a_.squaredNorm();
    if (lambda < -cone_tol || (p - lambda * a_).norm() > cone_tol) { return kInfinity; }
    return std::max(lambda, 0.0) * b_;
  }
  case Kind::affine: {
    if (q_.cols() > 0 && (q_.transpose() * p).norm() > cone_tol) { return kInfinity; }
    return offset_.dot(p);
  }
  case Kind::linf_ball: return radius_ * p.lpNorm<1>();
  case Kind::simplex: return p.maxCoeff();
  }
  return kInfinity;
}

std::string ConvexSet::describe() const
{
  std::ostringstream os;
  switch (kind_) {
  case Kind::box: os << "box(dim=" << dim_ << ")"; break;
  case Kind::halfspace: os << "halfspace(dim=" << dim_ << ", b=" << b_ << ")"; break;
  case Kind::affine: os << "affine(dim=" << dim_ << ", rank=" << q_.cols() << ")"; break;
  case Kind::linf_ball: os << "linf_ball(dim=" << dim_ << ", r=" << radius_ << ")"; break;
  case Kind::simplex: os << "simplex(k=" << dim_ << ")"; break;
  }
  return os.str();
}

// ---------------------------------------------------------------- functions

namespace detail {

struct FnNode {
  ConvexFn::Kind kind;
  Index dim = 0;
  Matrix A;
  Vector f;
  double c = 0.0;
  double alpha = 0.0;
  double weight = 1.0;
  double lambda = 1.0;
  ConvexSet set;
  Vector vec;
  std::optional<LinOp> op;
  std::vector<ConvexFn> parts;
  std::vector<Index> offsets;

  static ConvexFn make(std::shared_ptr<FnNode> n) { return ConvexFn(std::move(n)); }
};

} // namespace detail

using detail::FnNode;
using Kind = ConvexFn::Kind;

ConvexFn::ConvexFn(std::shared_ptr<const detail::FnNode> node) : node_(std::move(node)) {}

namespace {

std::shared_ptr<FnNode> node_of(Kind k, Index dim)
{
  auto n = std::make_shared<FnNode>();
  n->kind = k;
  n->dim = dim;
  return n;
}

} // namespace

ConvexFn ConvexFn::quadratic(Matrix A, Vector f, double c)
{
  if (A.rows() != A.cols() || A.rows() != f.size()) { throw DimensionError("quadratic: A and f dimensions differ"); }
  if (!A.allFinite()) { throw Error("quadratic: non-finite matrix"); }
  require_finite(f, "quadratic linear term");
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + A.cwiseAbs().maxCoeff())) {
    throw Error("quadratic: matrix is not symmetric");
  }
  if (A.rows() > 0) {
    const double lo = Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (A + A.transpose()), Eigen::EigenvaluesOnly).eigenvalues()(0);
    if (lo < -1e-10 * (1.0 + A.cwiseAbs().maxCoeff())) { throw Error("quadratic: matrix is not positive semidefinite"); }
  }
  auto n = node_of(Kind::quadratic, f.size());
  n->A = 0.5 * (A + A.transpose());
  n->f = std::move(f);
  n->c = c;
  return FnNode::make(n);
}

ConvexFn ConvexFn::squared_distance(double alpha, Vector center, double c)
{
  if (!(alpha > 0.0)) { throw Error("squared_distance: alpha must be positive"); }
  require_finite(center, "squared_distance center");
  auto n = node_of(Kind::squared_distance, center.size());
  n->alpha = alpha;
  n->vec = std::move(center);
  n->c = c;
  return FnNode::make(n);
}

ConvexFn ConvexFn::l1(Index dim, double weight)
{
  if (dim < 1 || !(weight > 0.0)) { throw Error("l1: need dim >= 1 and weight > 0"); }
  auto n = node_of(Kind::l1, dim);
  n->weight = weight;
  return FnNode::make(n);
}

ConvexFn ConvexFn::indicator(ConvexSet set)
{
  auto n = node_of(Kind::indicator, set.dim());
  n->set = std::move(set);
  return FnNode::make(n);
}

ConvexFn ConvexFn::support(ConvexSet set)
{
  auto n = node_of(Kind::support, set.dim());
  n->set = std::move(set);
  return FnNode::make(n);
}

ConvexFn ConvexFn::log_sum_exp(Index k)
{
  if (k < 1) { throw Error("log_sum_exp: need k >= 1"); }
  return FnNode::make(node_of(Kind::log_sum_exp, k));
}

ConvexFn ConvexFn::neg_entropy(Index k)
{
  if (k < 1) { throw Error("neg_entropy: need k >= 1"); }
  return FnNode::make(node_of(Kind::neg_entropy, k));
}

ConvexFn ConvexFn::linear(Vector c)
{
  require_finite(c, "linear coefficient");
  auto n = node_of(Kind::linear, c.size());
  n->vec = std::move(c);
  return FnNode::make(n);
}

ConvexFn ConvexFn::zero(Index dim) { return linear(Vector::Zero(dim)); }

ConvexFn ConvexFn::precompose(ConvexFn inner, LinOp op, std::optional<Vector> shift)
{
  if (op.rows() != inner.dim()) {
    throw DimensionError("precompose: operator codomain " + std::to_string(op.rows()) + " != function dimension " +
                         std::to_string(inner.dim()));
  }
  auto n = node_of(Kind::precompose, op.cols());
  n->vec = shift ? *shift : Vector::Zero(op.rows());
  require_dim(n->vec, op.rows(), "precompose shift");
  n->op = std::move(op);
  n->parts = {std::move(inner)};
  return FnNode::make(n);
}

ConvexFn ConvexFn::sum(std::vector<ConvexFn> terms)
{
  if (terms.empty()) { throw Error("sum of no functions"); }
  const Index d = terms.front().dim();
  for (const auto& t : terms) {
    if (t.dim() != d) { throw DimensionError("sum: term dimensions differ"); }
  }
  if (terms.size() == 1) { return terms.front(); }
  auto n = node_of(Kind::sum, d);
  n->parts = std::move(terms);
  return FnNode::make(n);
}

ConvexFn ConvexFn::block_separable(std::vector<ConvexFn> blocks)
{
  if (blocks.empty()) { throw Error("block_separable of no functions"); }
  auto n = node_of(Kind::block_separable, 0);
  for (const auto& b : blocks) {
    n->offsets.push_back(n->dim);
    n->dim += b.dim();
  }
  n->parts = std::move(blocks);
  return FnNode::make(n);
}

ConvexFn ConvexFn::translate(ConvexFn inner, Vector c)
{
  require_dim(c, inner.dim(), "translate");
  auto n = node_of(Kind::translate, inner.dim());
  n->vec = std::move(c);
  n->parts = {std::move(inner)};
  return FnNode::make(n);
}

ConvexFn ConvexFn::tilt(ConvexFn inner, Vector a, double c0)
{
  require_dim(a, inner.dim(), "tilt");
  auto n = node_of(Kind::tilt, inner.dim());
  n->vec = std::move(a);
  n->c = c0;
  n->parts = {std::move(inner)};
  return FnNode::make(n);
}

ConvexFn ConvexFn::scale(ConvexFn inner, double lambda)
{
  if (!(lambda > 0.0)) { throw Error("scale: factor must be positive"); }
  auto n = node_of(Kind::scale, inner.dim());
  n->lambda = lambda;
  n->parts = {std::move(inner)};
  return FnNode::make(n);
}

Kind ConvexFn::kind() const { return node_->kind; }
Index ConvexFn::dim() const { return node_->dim; }
const std::vector<ConvexFn>& ConvexFn::parts() const { return node_->parts; }

const ConvexSet& ConvexFn::set() const
{
  if (kind() != Kind::indicator && kind() != Kind::support) { throw Error("set(): function has no set"); }
  return node_->set;
}

const LinOp& ConvexFn::op() const
{
  if (!node_->op) { throw Error("op(): function has no operator"); }
  return *node_->op;
}

std::vector<Index> ConvexFn::block_offsets() const { return node_->offsets; }
double ConvexFn::l1_weight() const
{
  if (node_->kind != Kind::l1) { throw Error("l1_weight: not an l1 norm: " + describe()); }
  return node_->weight;
}
double ConvexFn::scale_factor() const
{
  if (node_->kind != Kind::scale) { throw Error("scale_factor: not a scaled function: " + describe()); }
  return node_->lambda;
}

std::string ConvexFn::describe() const
{
  const auto& n = *node_;
  std::ostringstream os;
  switch (n.kind) {
  case Kind::quadratic: os << "quadratic(dim=" << n.dim << ")"; break;
  case Kind::squared_distance: os << "squared_distance(alpha=" << n.alpha << ")"; break;
  case Kind::l1: os << "l1(weight=" << n.weight << ")"; break;
  case Kind::indicator: os << "indicator(" << n.set.describe() << ")"; break;
  case Kind::support: os << "support(" << n.set.describe() << ")"; break;
  case Kind::log_sum_exp: os << "log_sum_exp(k=" << n.dim << ")"; break;
  case Kind::neg_entropy: os << "neg_entropy(k=" << n.dim << ")"; break;
  case Kind::linear: os << "linear(dim=" << n.dim << ")"; break;
  case Kind::precompose: os << "precompose(" << n.parts[0].describe() << ")"; break;
  case Kind::sum:
  case Kind::block_separable: {
    os << (n.kind == Kind::sum ? "sum(" : "block_separable(");
    for (std::size_t i = 0; i < n.parts.size(); ++i) { os << (i ? ", " : "") << n.parts[i].describe(); }
    os << ")";
    break;
  }
  case Kind::translate: os << "translate(" << n.parts[0].describe() << ")"; break;
  case Kind::tilt: os << "tilt(" << n.parts[0].describe() << ")"; break;
  case Kind::scale: os << "scale(" << n.lambda << ", " << n.parts[0].describe() << ")"; break;
  }
  return os.str();
}

namespace {

double min_eigenvalue(const Matrix& a)
{
  if (a.rows() == 0) { return 0.0; }
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double max_eigenvalue(const Matrix& a)
{
  if (a.rows() == 0) { return 0.0; }
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

} // namespace

double ConvexFn::strong_convexity() const
{
  if (mu_) { return *mu_; }
  const auto& n = *node_;
  switch (n.kind) {
  case Kind::quadratic: return std::max(0.0, min_eigenvalue(n.A));
  case Kind::squared_distance: return n.alpha;
  case Kind::neg_entropy: return 1.0;
  case Kind::sum: {
    double mu = 0.0;
    for (const auto& p : n.parts) { mu += p.strong_convexity(); }
    return mu;
  }
  case Kind::block_separable: {
    double mu = kInfinity;
    for (const auto& p : n.parts) { mu = std::min(mu, p.strong_convexity()); }
    return mu;
  }
  case Kind::translate:
  case Kind::tilt: return n.parts[0].strong_convexity();
  case Kind::scale: return n.lambda * n.parts[0].strong_convexity();
  case Kind::precompose: {
    if (auto s = n.op->scalar_identity()) { return (*s) * (*s) * n.parts[0].strong_convexity(); }
    return 0.0;
  }
  default: return 0.0;
  }
}

std::optional<double> ConvexFn::smoothness() const
{
  if (lip_) { return lip_; }
  const auto& n = *node_;
  switch (n.kind) {
  case Kind::quadratic: return max_eigenvalue(n.A);
  case Kind::squared_distance: return n.alpha;
  case Kind::log_sum_exp: return 1.0;
  case Kind::linear: return 0.0;
  case Kind::sum: {
    double L = 0.0;
    for (const auto& p : n.parts) {
      auto l = p.smoothness();
      if (!l) { return std::nullopt; }
      L += *l;
    }
    return L;
  }
  case Kind::block_separable: {
    double L = 0.0;
    for (const auto& p : n.parts) {
      auto l = p.smoothness();
      if (!l) { return std::nullopt; }
      L = std::max(L, *l);
    }
    return L;
  }
  case Kind::translate:
  case Kind::tilt: return n.parts[0].smoothness();
  case Kind::scale: {
    auto l = n.parts[0].smoothness();
    if (!l) { return std::nullopt; }
    return n.lambda * *l;
  }
  case Kind::precompose: {
    auto l = n.parts[0].smoothness();
    if (!l) { return std::nullopt; }
    const double nb = operator_norm(*n.op);
    return nb * nb * *l;
  }
  default: return std::nullopt;
  }
}

ConvexFn ConvexFn::with_moduli(double mu, std::optional<double> L) const
{
  if (mu < 0.0) { throw Error("with_moduli: negative strong convexity modulus"); }
  ConvexFn out = *this;
  out.mu_ = mu;
  out.lip_ = L;
  return out;
}

// ---------------------------------------------------------------- evaluation

namespace {

double log_sum_exp_value(const Vector& u)
{
  const double m = u.maxCoeff();
  return m + std::log((u.array() - m).exp().sum());
}

Vector softmax(const Vector& u)
{
  const double m = u.maxCoeff();
  Vector e = (u.array() - m).exp().matrix();
  return e / e.sum();
}

double entropy_value(const Vector& p)
{
  if (!ConvexSet::simplex(p.size()).contains(p)) { return kInfinity; }
  double s = 0.0;
  for (Index i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) { s += p[i] * std::log(p[i]); }
  }
  return s;
}

[[noreturn]] void not_differentiable(const ConvexFn& F)
{
  throw Error("gradient unavailable: " + F.describe() + " is not differentiable");
}

} // namespace

double eval(const ConvexFn& F, const Vector& u)
{
  require_dim(u, F.dim(), "eval");
  const auto& n = F.node();
  switch (n.kind) {
  case Kind::quadratic: return 0.5 * u.dot(n.A * u) - n.f.dot(u) + n.c;
  case Kind::squared_distance: return 0.5 * n.alpha * (u - n.vec).squaredNorm() + n.c;
  case Kind::l1: return n.weight * u.lpNorm<1>();
  case Kind::indicator: return n.set.contains(u) ? 0.0 : kInfinity;
  case Kind::support: return n.set.support(u);
  case Kind::log_sum_exp: return log_sum_exp_value(u);
  case Kind::neg_entropy: return entropy_value(u);
  case Kind::linear: return n.vec.dot(u);
  case Kind::precompose: return eval(n.parts[0], n.op->apply(u) + n.vec);
  case Kind::sum: {
    double s = 0.0;
    for (const auto& p : n.parts) { s = ext_add(s, eval(p, u)); }
    return s;
  }
  case Kind::block_separable: {
    double s = 0.0;
    for (std::size_t j = 0; j < n.parts.size(); ++j) {
      s = ext_add(s, eval(n.parts[j], u.segment(n.offsets[j], n.parts[j].dim())));
    }
    return s;
  }
  case Kind::translate: return eval(n.parts[0], u - n.vec);
  case Kind::tilt: return ext_add(eval(n.parts[0], u), n.vec.dot(u) + n.c);
  case Kind::scale: {
    const double v = eval(n.parts[0], u);
    return v == kInfinity ? kInfinity : n.lambda * v;
  }
  }
  throw Error("eval: unknown kind");
}

Vector grad(const ConvexFn& F, const Vector& u)
{
  require_dim(u, F.dim(), "grad");
  const auto& n = F.node();
  switch (n.kind) {
  case Kind::quadratic: return n.A * u - n.f;
  case Kind::squared_distance: return n.alpha * (u - n.vec);
  case Kind::log_sum_exp: return softmax(u);
  case Kind::linear: return n.vec;
  case Kind::precompose: return n.op->apply_adjoint(grad(n.parts[0], n.op->apply(u) + n.vec));
  case Kind::sum: {
    Vector g = Vector::Zero(F.dim());
    for (const auto& p : n.parts) { g += grad(p, u); }
    return g;
  }
  case Kind::block_separable: {
    Vector g(F.dim());
    for (std::size_t j = 0; j < n.parts.size(); ++j) {
      const Index d = n.parts[j].dim();
      g.segment(n.offsets[j], d) = grad(n.parts[j], u.segment(n.offsets[j], d));
    }
    return g;
  }
  case Kind::translate: return grad(n.parts[0], u - n.vec);
  case Kind::tilt: return grad(n.parts[0], u) + n.vec;
  case Kind::scale: return n.lambda * grad(n.parts[0], u);
  default: not_differentiable(F);
  }
}

Matrix hessian(const ConvexFn& F, const Vector& u)
{
  require_dim(u, F.dim(), "hessian");
  const auto& n = F.node();
  switch (n.kind) {
  case Kind::quadratic: return n.A;
  case Kind::squared_distance: return n.alpha * Matrix::Identity(F.dim(), F.dim());
  case Kind::linear: return Matrix::Zero(F.dim(), F.dim());
  case Kind::log_sum_exp: {
    Vector s = softmax(u);
    Matrix h = -s * s.transpose();
    h.diagonal() += s;
    return h;
  }
  case Kind::precompose: {
    const Matrix b = n.op->to_dense();
    return b.transpose() * hessian(n.parts[0], n.op->apply(u) + n.vec) * b;
  }
  case Kind::sum: {
    Matrix h = Matrix::Zero(F.dim(), F.dim());
    for (const auto& p : n.parts) { h += hessian(p, u); }
    return h;
  }
  case Kind::block_separable: {
    Matrix h = Matrix::Zero(F.dim(), F.dim());
    for (std::size_t j = 0; j < n.parts.size(); ++j) {
      const Index d = n.parts[j].dim();
      h.block(n.offsets[j], n.offsets[j], d, d) = hessian(n.parts[j], u.segment(n.offsets[j], d));
    }
    return h;
  }
  case Kind::translate: return hessian(n.parts[0], u - n.vec);
  case Kind::tilt: return hessian(n.parts[0], u);
  case Kind::scale: return n.lambda * hessian(n.parts[0], u);
  default: not_differentiable(F);
  }
}

bool is_differentiable(const ConvexFn& F)
{
  const auto& n = F.node();
  switch (n.kind) {
  case Kind::quadratic:
  case Kind::squared_distance:
  case Kind::log_sum_exp:
  case Kind::linear: return true;
  case Kind::precompose:
  case Kind::translate:
  case Kind::tilt:
  case Kind::scale: return is_differentiable(n.parts[0]);
  case Kind::sum:
  case Kind::block_separable:
    return std::all_of(n.parts.begin(), n.parts.end(), [](const ConvexFn& p) { return is_differentiable(p); });
  default: return false;
  }
}

bool has_prox(const ConvexFn& F)
{
  const auto& n = F.node();
  switch (n.kind) {
  case Kind::sum: return false;
  case Kind::precompose: return n.op->scalar_identity().has_value() && has_prox(n.parts[0]);
  case Kind::translate:
  case Kind::tilt:
  case Kind::scale: return has_prox(n.parts[0]);
  case Kind::block_separable:
    return std::all_of(n.parts.begin(), n.parts.end(), [](const ConvexFn& p) { return has_prox(p); });
  default: return true;
  }
}

// ---------------------------------------------------------------- prox

Vector entropy_prox(const Vector& w, double s)
{
  if (!(s > 0.0)) { throw Error("entropy_prox: scale must be positive"); }
  require_finite(w, "entropy_prox input");
  const Index k = w.size();
  if (k == 1) { return Vector::Ones(1); }

  // p solves p + s·log p = c; Newton in y = log p on the bracket [y_lo, y_hi]
  auto coordinate = [s](double c) {
    double lo = std::min((c - 1.0 - s) / s, std::log1p(s) - 1.0);
    double hi = std::min(c / s + 1.0, std::log(std::abs(c) + s + 1.0));
    double y = hi;
    for (int it = 0; it < 200; ++it) {
      const double ey = std::exp(y);
      const double g = ey + s * y - c;
      if (g > 0.0) {
        hi = y;
      } else {
        lo = y;
      }
      double next = y - g / (ey + s);
      if (!(next > lo && next < hi)) { next = 0.5 * (lo + hi); }
      if (std::abs(next - y) <= 1e-15 * (1.0 + std::abs(y))) {
        y = next;
        break;
      }
      y = next;
    }
    return std::exp(y);
  };

  const double wmax = w.maxCoeff();
  double lo = wmax - s - 1.0;
  double hi = wmax - s - 1.0 / static_cast<double>(k) + s * std::log(static_cast<double>(k));
  double nu = 0.5 * (lo + hi);
  Vector p(k);
  for (int it = 0; it < 100; ++it) {
    double total = 0.0;
    double slope = 0.0;
    for (Index i = 0; i < k; ++i) {
      p[i] = coordinate(w[i] - s - nu);
      total += p[i];
      slope -= p[i] / (p[i] + s);
    }
    const double h = total - 1.0;
    if (std::abs(h) <= 1e-12) { break; }
    if (h > 0.0) {
      lo = nu;
    } else {
      hi = nu;
    }
    double next = nu - h / slope;
    if (!(next > lo && next < hi)) { next = 0.5 * (lo + hi); }
    if (next == nu) { break; }
    nu = next;
  }
  return p / p.sum();
}

Vector prox(const ConvexFn& F, const Vector& v, double t)
{
  require_dim(v, F.dim(), "prox");
  if (!(t > 0.0)) { throw Error("prox: step t must be positive"); }
  const auto& n = F.node();
  switch (n.kind) {
  case Kind::quadratic: {
    Matrix m = t * n.A;
    m.diagonal().array() += 1.0;
    return SpdSolver(m).solve(v + t * n.f);
  }
  case Kind::squared_distance: return (v + t * n.alpha * n.vec) / (1.0 + t * n.alpha);
  case Kind::l1: {
    const double thr = t * n.weight;
    return (v.array().sign() * (v.array().abs() - thr).max(0.0)).matrix();
  }
  case Kind::indicator: return n.set.project(v);
  case Kind::support: return v - t * n.set.project(v / t);
  case Kind::log_sum_exp: return v - t * entropy_prox(v / t, 1.0 / t);
  case Kind::neg_entropy: return entropy_prox(v, t);
  case Kind::linear: return v - t * n.vec;
  case Kind::precompose: {
    auto s = n.op->scalar_identity();
    if (!s || *s == 0.0) { break; }
    const Vector y = prox(n.parts[0], *s * v + n.vec, t * *s * *s);
    return (y - n.vec) / *s;
  }
  case Kind::block_separable: {
    Vector out(F.dim());
    for (std::size_t j = 0; j < n.parts.size(); ++j) {
      const Index d = n.parts[j].dim();
      out.segment(n.offsets[j], d) = prox(n.parts[j], v.segment(n.offsets[j], d), t);
    }
    return out;
  }
  case Kind::translate: return n.vec + prox(n.parts[0], v - n.vec, t);
  case Kind::tilt: return prox(n.parts[0], v - t * n.vec, t);
  case Kind::scale: return prox(n.parts[0], v, t * n.lambda);
  case Kind::sum: break;
  }
  throw Error("prox unavailable for " + F.describe() +
              "; supported: quadratic, squared_distance, l1, indicator, support, log_sum_exp, neg_entropy, "
              "linear, block_separable, translate/tilt/scale wrappers, precompose with a scalar operator");
}

Vector prox_conjugate_via_moreau(const ConvexFn& F, const Vector& v, double t)
{
  if (!(t > 0.0)) { throw Error("prox_conjugate_via_moreau: step t must be positive"); }
  return v - t * prox(F, v / t, 1.0 / t);
}

// ---------------------------------------------------------------- conjugates

ConvexFn conjugate(const ConvexFn& F)
{
  const auto& n = F.node();
  switch (n.kind) {
  case Kind::quadratic: {
    Matrix inv = inverse_spd(n.A);
    Vector g = inv * n.f;
    return ConvexFn::quadratic(inv, -g, 0.5 * n.f.dot(g) - n.c);
  }
  case Kind::squared_distance:
    return ConvexFn::squared_distance(1.0 / n.alpha, -n.alpha * n.vec,
                                      -0.5 * n.alpha * n.vec.squaredNorm() - n.c);
  case Kind::l1: return ConvexFn::indicator(ConvexSet::linf_ball(n.dim, n.weight));
  case Kind::indicator: {
    if (n.set.kind() == ConvexSet::Kind::linf_ball) { return ConvexFn::l1(n.dim, n.set.radius()); }
    if (n.set.kind() == ConvexSet::Kind::affine && n.set.basis().cols() == 0) {
      return ConvexFn::linear(n.set.offset());
    }
    return ConvexFn::support(n.set);
  }
  case Kind::support: return ConvexFn::indicator(n.set);
  case Kind::log_sum_exp: return ConvexFn::neg_entropy(n.dim);
  case Kind::neg_entropy: return ConvexFn::log_sum_exp(n.dim);
  case Kind::linear: return ConvexFn::indicator(ConvexSet::point(n.vec));
  case Kind::precompose: {
    auto s = n.op->scalar_identity();
    if (!s || *s == 0.0) { break; }
    // (G(s·u + b))*(p) = G*(p/s) − (b,p)/s
    ConvexFn inner = conjugate(n.parts[0]);
    ConvexFn scaled = *s == 1.0 ? inner : ConvexFn::precompose(inner, LinOp::scaling(n.dim, 1.0 / *s));
    if (n.vec.squaredNorm() == 0.0) { return scaled; }
    return ConvexFn::tilt(scaled, -n.vec / *s);
  }
  case Kind::block_separable: {
    std::vector<ConvexFn> blocks;
    for (const auto& p : n.parts) { blocks.push_back(conjugate(p)); }
    return ConvexFn::block_separable(std::move(blocks));
  }
  case Kind::translate: return ConvexFn::tilt(conjugate(n.parts[0]), n.vec);
  case Kind::tilt: {
    ConvexFn inner = ConvexFn::translate(conjugate(n.parts[0]), n.vec);
    return n.c == 0.0 ? inner : ConvexFn::tilt(inner, Vector::Zero(n.dim), -n.c);
  }
  case Kind::scale:
    return ConvexFn::scale(
        ConvexFn::precompose(conjugate(n.parts[0]), LinOp::scaling(n.dim, 1.0 / n.lambda)), n.lambda);
  case Kind::sum: break;
  }
  throw Error("conjugate unavailable for " + F.describe());
}

Vector grad_conjugate(const ConvexFn& F, const Vector& p)
{
  require_dim(p, F.dim(), "grad_conjugate");
  const auto& n = F.node();
  if (auto q = as_quadratic(F)) {
    return SpdSolver(q->A).solve(p + q->f);
  }
  if (n.kind == Kind::sum) {
    // ∇G(u) + μ(u − c) = p  ⇔  u = prox_G(c + p/μ, 1/μ)
    for (std::size_t i = 0; i < n.parts.size(); ++i) {
      const auto& t = n.parts[i];
      if (t.kind() != Kind::squared_distance) { continue; }
      const double mu = t.node().alpha;
      const Vector& c = t.node().vec;
      std::vector<ConvexFn> rest;
      for (std::size_t j = 0; j < n.parts.size(); ++j) {
        if (j != i) { rest.push_back(n.parts[j]); }
      }
      ConvexFn g = ConvexFn::sum(std::move(rest));
      if (has_prox(g)) { return prox(g, c + p / mu, 1.0 / mu); }
    }
  }
  if (n.kind == Kind::tilt) { return grad_conjugate(n.parts[0], p - n.vec); }
  if (n.kind == Kind::translate) { return n.vec + grad_conjugate(n.parts[0], p); }
  ConvexFn c = conjugate(F);
  if (!is_differentiable(c)) {
    throw Error("grad_conjugate: conjugate of " + F.describe() + " is not differentiable (F not strongly convex)");
  }
  return grad(c, p);
}

// ---------------------------------------------------------------- derived quantities

double bregman(const ConvexFn& F, const Vector& u, const Vector& v)
{
  return eval(F, u) - eval(F, v) - grad(F, v).dot(u - v);
}

double fenchel_young_residual(const ConvexFn& F, const Vector& u, const Vector& p)
{
  require_dim(u, F.dim(), "fenchel_young_residual");
  require_dim(p, F.dim(), "fenchel_young_residual");
  const double fu = eval(F, u);
  const double fp = eval(conjugate(F), p);
  if (!std::isfinite(fu) || !std::isfinite(fp)) {
    throw Error("membership undecidable at infinite value (" + F.describe() + ")");
  }
  return fu + fp - p.dot(u);
}

std::optional<QuadraticForm> as_quadratic(const ConvexFn& F)
{
  const auto& n = F.node();
  const Index d = F.dim();
  switch (n.kind) {
  case Kind::quadratic: return QuadraticForm{n.A, n.f, n.c};
  case Kind::squared_distance:
    return QuadraticForm{n.alpha * Matrix::Identity(d, d), n.alpha * n.vec,
                         0.5 * n.alpha * n.vec.squaredNorm() + n.c};
  case Kind::linear: return QuadraticForm{Matrix::Zero(d, d), -n.vec, 0.0};
  case Kind::precompose: {
    auto q = as_quadratic(n.parts[0]);
    if (!q) { return std::nullopt; }
    const Matrix m = n.op->to_dense();
    const Vector as = q->A * n.vec;
    return QuadraticForm{m.transpose() * q->A * m, m.transpose() * (q->f - as),
                         0.5 * n.vec.dot(as) - q->f.dot(n.vec) + q->c};
  }
  case Kind::sum: {
    QuadraticForm out{Matrix::Zero(d, d), Vector::Zero(d), 0.0};
    for (const auto& p : n.parts) {
      auto q = as_quadratic(p);
      if (!q) { return std::nullopt; }
      out.A += q->A;
      out.f += q->f;
      out.c += q->c;
    }
    return out;
  }
  case Kind::block_separable: {
    QuadraticForm out{Matrix::Zero(d, d), Vector::Zero(d), 0.0};
    for (std::size_t j = 0; j < n.parts.size(); ++j) {
      auto q = as_quadratic(n.parts[j]);
      if (!q) { return std::nullopt; }
      const Index o = n.offsets[j];
      const Index bd = n.parts[j].dim();
      out.A.block(o, o, bd, bd) = q->A;
      out.f.segment(o, bd) = q->f;
      out.c += q->c;
    }
    return out;
  }
  case Kind::translate: {
    auto q = as_quadratic(n.parts[0]);
    if (!q) { return std::nullopt; }
    const Vector ac = q->A * n.vec;
    return QuadraticForm{q->A, q->f + ac, 0.5 * n.vec.dot(ac) + q->f.dot(n.vec) + q->c};
  }
  case Kind::tilt: {
    auto q = as_quadratic(n.parts[0]);
    if (!q) { return std::nullopt; }
    return QuadraticForm{q->A, q->f - n.vec, q->c + n.c};
  }
  case Kind::scale: {
    auto q = as_quadratic(n.parts[0]);
    if (!q) { return std::nullopt; }
    return QuadraticForm{n.lambda * q->A, n.lambda * q->f, n.lambda * q->c};
  }
  default: return std::nullopt;
  }
}

std::optional<ConvexFn> restrict_to_block(const ConvexFn& F, Index offset, Index size)
{
  const auto& n = F.node();
  switch (n.kind) {
  case Kind::l1: return ConvexFn::l1(size, n.weight);
  case Kind::indicator:
  case Kind::support: {
    const auto& s = n.set;
    std::optional<ConvexSet> sub;
    if (s.kind() == ConvexSet::Kind::box) {
      sub = ConvexSet::box(s.lower().segment(offset, size), s.upper().segment(offset, size));
    } else if (s.kind() == ConvexSet::Kind::linf_ball) {
      sub = ConvexSet::linf_ball(size, s.radius());
    }
    if (!sub) { return std::nullopt; }
    return n.kind == Kind::indicator ? ConvexFn::indicator(*sub) : ConvexFn::support(*sub);
  }
  case Kind::block_separable: {
    for (std::size_t j = 0; j < n.parts.size(); ++j) {
      if (n.offsets[j] == offset && n.parts[j].dim() == size) { return n.parts[j]; }
    }
    return std::nullopt;
  }
  case Kind::scale: {
    auto inner = restrict_to_block(n.parts[0], offset, size);
    if (!inner) { return std::nullopt; }
    return ConvexFn::scale(*inner, n.lambda);
  }
  default: return std::nullopt;
  }
}

double Composite::value(const Vector& w) const
{
  double v = 0.5 * w.dot(H * w) - h.dot(w) + c;
  for (const auto& t : terms) { v = ext_add(v, eval(t.G, t.M * w + t.s)); }
  return v;
}

namespace {

bool coordinate_separable(const ConvexFn& F)
{
  switch (F.kind()) {
  case Kind::l1: return true;
  case Kind::indicator:
  case Kind::support:
    return F.set().kind() == ConvexSet::Kind::box || F.set().kind() == ConvexSet::Kind::linf_ball;
  case Kind::scale: return coordinate_separable(F.parts()[0]);
  default: return false;
  }
}

void add_leaf(const ConvexFn& F, const Matrix& M, const Vector& s, Composite& out)
{
  const Index rows = M.rows();
  std::vector<bool> active(static_cast<std::size_t>(rows));
  Index first = rows, last = -1;
  for (Index i = 0; i < rows; ++i) {
    active[static_cast<std::size_t>(i)] = M.row(i).cwiseAbs().maxCoeff() > 0.0;
    if (active[static_cast<std::size_t>(i)]) {
      first = std::min(first, i);
      last = i;
    }
  }
  if (last < 0) {
    out.c = ext_add(out.c, eval(F, s));
    return;
  }
  if (!coordinate_separable(F) || (first == 0 && last == rows - 1)) {
    out.terms.push_back({F, M, s});
    return;
  }
  // Only the rows in [first, last] depend on w; the rest contribute a constant.
  auto constant_piece = [&](Index o, Index n) {
    if (n > 0) { out.c = ext_add(out.c, eval(*restrict_to_block(F, o, n), s.segment(o, n))); }
  };
  constant_piece(0, first);
  constant_piece(last + 1, rows - last - 1);
  const Index n = last - first + 1;
  out.terms.push_back({*restrict_to_block(F, first, n), M.middleRows(first, n), s.segment(first, n)});
}

} // namespace

void flatten_into(const ConvexFn& F, const Matrix& M, const Vector& s, Composite& out)
{
  if (M.rows() != F.dim() || s.size() != F.dim()) {
    throw DimensionError("flatten: map has " + std::to_string(M.rows()) + " rows, function dim " +
                         std::to_string(F.dim()));
  }
  const auto& n = F.node();
  if (auto q = as_quadratic(F)) {
    const Vector As = q->A * s;
    out.H += M.transpose() * q->A * M;
    out.h += M.transpose() * (q->f - As);
    out.c += 0.5 * s.dot(As) - q->f.dot(s) + q->c;
    return;
  }
  switch (n.kind) {
  case Kind::precompose: {
    const Matrix P = n.op->to_dense();
    flatten_into(n.parts[0], P * M, P * s + n.vec, out);
    return;
  }
  case Kind::sum:
    for (const auto& p : n.parts) { flatten_into(p, M, s, out); }
    return;
  case Kind::block_separable:
    for (std::size_t j = 0; j < n.parts.size(); ++j) {
      const Index o = n.offsets[j];
      const Index d = n.parts[j].dim();
      flatten_into(n.parts[j], M.middleRows(o, d), s.segment(o, d), out);
    }
    return;
  case Kind::translate: flatten_into(n.parts[0], M, s - n.vec, out); return;
  case Kind::tilt:
    flatten_into(n.parts[0], M, s, out);
    out.h -= M.transpose() * n.vec;
    out.c += n.vec.dot(s) + n.c;
    return;
  case Kind::scale: {
    Composite inner = flatten(n.parts[0], M, s);
    out.H += n.lambda * inner.H;
    out.h += n.lambda * inner.h;
    out.c = ext_add(out.c, n.lambda * inner.c);
    for (auto& t : inner.terms) { out.terms.push_back({ConvexFn::scale(t.G, n.lambda), t.M, t.s}); }
    return;
  }
  default: add_leaf(F, M, s, out); return;
  }
}

Composite flatten(const ConvexFn& F, const Matrix& M, const Vector& s)
{
  Composite out;
  out.H = Matrix::Zero(M.cols(), M.cols());
  out.h = Vector::Zero(M.cols());
  flatten_into(F, M, s, out);
  return out;
}

} // namespace dualkit
