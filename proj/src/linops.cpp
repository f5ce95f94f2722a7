#include "dualkit/linops.hpp"

#include "dualkit/rng.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dualkit {

Vector make_vector(std::initializer_list<double> values)
{
  return make_vector(std::vector<double>(values));
}

Vector make_vector(const std::vector<double>& values)
{
  Vector v(static_cast<Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) { v[static_cast<Index>(i)] = values[i]; }
  require_finite(v, "vector");
  return v;
}

void require_finite(const Vector& v, std::string_view what)
{
  for (Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw Error(std::string(what) + ": non-finite entry at index " + std::to_string(i));
    }
  }
}

void require_dim(const Vector& v, Index dim, std::string_view what)
{
  if (v.size() != dim) {
    throw DimensionError(std::string(what) + ": expected dimension " + std::to_string(dim) + ", got " +
                         std::to_string(v.size()));
  }
}

namespace detail {

struct OpNode {
  LinOp::Kind kind;
  Index rows = 0;
  Index cols = 0;
  Matrix m;
  double s = 1.0;
  std::vector<LinOp> parts;
};

} // namespace detail

LinOp::LinOp(std::shared_ptr<const detail::OpNode> node) : node_(std::move(node)) {}

LinOp LinOp::dense(Matrix m)
{
  if (m.rows() < 1 || m.cols() < 1) { throw DimensionError("dense operator needs positive dimensions"); }
  if (!m.allFinite()) { throw Error("dense operator: non-finite entry"); }
  auto n = std::make_shared<detail::OpNode>();
  n->kind = Kind::dense;
  n->rows = m.rows();
  n->cols = m.cols();
  n->m = std::move(m);
  return LinOp(n);
}

LinOp LinOp::identity(Index dim) { return scaling(dim, 1.0); }

LinOp LinOp::scaling(Index dim, double s)
{
  if (dim < 1) { throw DimensionError("scaling operator needs positive dimension"); }
  if (!std::isfinite(s)) { throw Error("scaling operator: non-finite factor"); }
  auto n = std::make_shared<detail::OpNode>();
  n->kind = s == 1.0 ? Kind::identity : Kind::scaling;
  n->rows = n->cols = dim;
  n->s = s;
  return LinOp(n);
}

LinOp LinOp::vstack(std::vector<LinOp> parts)
{
  if (parts.empty()) { throw DimensionError("vstack of no operators"); }
  auto n = std::make_shared<detail::OpNode>();
  n->kind = Kind::vstack;
  n->cols = parts.front().cols();
  for (const auto& p : parts) {
    if (p.cols() != n->cols) {
      throw DimensionError("vstack: domain dimensions differ (" + std::to_string(n->cols) + " vs " +
                           std::to_string(p.cols()) + ")");
    }
    n->rows += p.rows();
  }
  n->parts = std::move(parts);
  return LinOp(n);
}

LinOp LinOp::hcat(std::vector<LinOp> parts)
{
  if (parts.empty()) { throw DimensionError("hcat of no operators"); }
  auto n = std::make_shared<detail::OpNode>();
  n->kind = Kind::hcat;
  n->rows = parts.front().rows();
  for (const auto& p : parts) {
    if (p.rows() != n->rows) {
      throw DimensionError("hcat: codomain dimensions differ (" + std::to_string(n->rows) + " vs " +
                           std::to_string(p.rows()) + ")");
    }
    n->cols += p.cols();
  }
  n->parts = std::move(parts);
  return LinOp(n);
}

LinOp LinOp::block_diagonal(std::vector<LinOp> parts)
{
  if (parts.empty()) { throw DimensionError("block_diagonal of no operators"); }
  auto n = std::make_shared<detail::OpNode>();
  n->kind = Kind::block_diagonal;
  for (const auto& p : parts) {
    n->rows += p.rows();
    n->cols += p.cols();
  }
  n->parts = std::move(parts);
  return LinOp(n);
}

LinOp LinOp::forward_difference(Index d)
{
  if (d < 1) { throw DimensionError("forward difference needs d >= 1"); }
  auto n = std::make_shared<detail::OpNode>();
  n->kind = Kind::forward_difference;
  n->rows = n->cols = d;
  return LinOp(n);
}

LinOp LinOp::compose(LinOp outer, LinOp inner)
{
  if (outer.cols() != inner.rows()) {
    throw DimensionError("compose: outer domain " + std::to_string(outer.cols()) + " != inner codomain " +
                         std::to_string(inner.rows()));
  }
  auto n = std::make_shared<detail::OpNode>();
  n->kind = Kind::composition;
  n->rows = outer.rows();
  n->cols = inner.cols();
  n->parts = {std::move(outer), std::move(inner)};
  return LinOp(n);
}

LinOp LinOp::adjoint() const
{
  switch (node_->kind) {
  case Kind::identity:
  case Kind::scaling: return *this;
  case Kind::adjoint: return node_->parts.front();
  case Kind::dense: return dense(node_->m.transpose());
  default: break;
  }
  auto n = std::make_shared<detail::OpNode>();
  n->kind = Kind::adjoint;
  n->rows = node_->cols;
  n->cols = node_->rows;
  n->parts = {*this};
  return LinOp(n);
}

LinOp::Kind LinOp::kind() const { return node_->kind; }
Index LinOp::rows() const { return node_->rows; }
Index LinOp::cols() const { return node_->cols; }
const std::vector<LinOp>& LinOp::parts() const { return node_->parts; }

std::optional<double> LinOp::scalar_identity() const
{
  switch (node_->kind) {
  case Kind::identity:
  case Kind::scaling: return node_->s;
  case Kind::adjoint: return node_->parts.front().scalar_identity();
  case Kind::composition: {
    auto a = node_->parts[0].scalar_identity();
    auto b = node_->parts[1].scalar_identity();
    if (a && b) { return *a * *b; }
    return std::nullopt;
  }
  default: return std::nullopt;
  }
}

namespace {

Vector difference_apply(const Vector& u)
{
  const Index d = u.size();
  Vector out = Vector::Zero(d);
  for (Index i = 0; i + 1 < d; ++i) { out[i] = u[i + 1] - u[i]; }
  return out;
}

Vector difference_adjoint(const Vector& w)
{
  const Index d = w.size();
  Vector out = Vector::Zero(d);
  for (Index i = 0; i + 1 < d; ++i) {
    out[i] -= w[i];
    out[i + 1] += w[i];
  }
  return out;
}

} // namespace

Vector LinOp::apply(const Vector& v) const
{
  require_dim(v, cols(), "LinOp::apply");
  const auto& n = *node_;
  switch (n.kind) {
  case Kind::dense: return n.m * v;
  case Kind::identity: return v;
  case Kind::scaling: return n.s * v;
  case Kind::forward_difference: return difference_apply(v);
  case Kind::adjoint: return n.parts.front().apply_adjoint(v);
  case Kind::composition: return n.parts[0].apply(n.parts[1].apply(v));
  case Kind::vstack: {
    Vector out(n.rows);
    Index off = 0;
    for (const auto& p : n.parts) {
      out.segment(off, p.rows()) = p.apply(v);
      off += p.rows();
    }
    return out;
  }
  case Kind::hcat: {
    Vector out = Vector::Zero(n.rows);
    Index off = 0;
    for (const auto& p : n.parts) {
      out += p.apply(v.segment(off, p.cols()));
      off += p.cols();
    }
    return out;
  }
  case Kind::block_diagonal: {
    Vector out(n.rows);
    Index ro = 0;
    Index co = 0;
    for (const auto& p : n.parts) {
      out.segment(ro, p.rows()) = p.apply(v.segment(co, p.cols()));
      ro += p.rows();
      co += p.cols();
    }
    return out;
  }
  }
  throw Error("LinOp::apply: unknown kind");
}

Vector LinOp::apply_adjoint(const Vector& w) const
{
  require_dim(w, rows(), "LinOp::apply_adjoint");
  const auto& n = *node_;
  switch (n.kind) {
  case Kind::dense: return n.m.transpose() * w;
  case Kind::identity: return w;
  case Kind::scaling: return n.s * w;
  case Kind::forward_difference: return difference_adjoint(w);
  case Kind::adjoint: return n.parts.front().apply(w);
  case Kind::composition: return n.parts[1].apply_adjoint(n.parts[0].apply_adjoint(w));
  case Kind::vstack: {
    Vector out = Vector::Zero(n.cols);
    Index off = 0;
    for (const auto& p : n.parts) {
      out += p.apply_adjoint(w.segment(off, p.rows()));
      off += p.rows();
    }
    return out;
  }
  case Kind::hcat: {
    Vector out(n.cols);
    Index off = 0;
    for (const auto& p : n.parts) {
      out.segment(off, p.cols()) = p.apply_adjoint(w);
      off += p.cols();
    }
    return out;
  }
  case Kind::block_diagonal: {
    Vector out(n.cols);
    Index ro = 0;
    Index co = 0;
    for (const auto& p : n.parts) {
      out.segment(co, p.cols()) = p.apply_adjoint(w.segment(ro, p.rows()));
      ro += p.rows();
      co += p.cols();
    }
    return out;
  }
  }
  throw Error("LinOp::apply_adjoint: unknown kind");
}

Matrix LinOp::to_dense() const
{
  const auto& n = *node_;
  switch (n.kind) {
  case Kind::dense: return n.m;
  case Kind::identity:
  case Kind::scaling: return n.s * Matrix::Identity(n.rows, n.cols);
  case Kind::adjoint: return n.parts.front().to_dense().transpose();
  case Kind::composition: return n.parts[0].to_dense() * n.parts[1].to_dense();
  case Kind::forward_difference: {
    Matrix m = Matrix::Zero(n.rows, n.cols);
    for (Index i = 0; i + 1 < n.rows; ++i) {
      m(i, i) = -1.0;
      m(i, i + 1) = 1.0;
    }
    return m;
  }
  case Kind::vstack: {
    Matrix m(n.rows, n.cols);
    Index off = 0;
    for (const auto& p : n.parts) {
      m.middleRows(off, p.rows()) = p.to_dense();
      off += p.rows();
    }
    return m;
  }
  case Kind::hcat: {
    Matrix m(n.rows, n.cols);
    Index off = 0;
    for (const auto& p : n.parts) {
      m.middleCols(off, p.cols()) = p.to_dense();
      off += p.cols();
    }
    return m;
  }
  case Kind::block_diagonal: {
    Matrix m = Matrix::Zero(n.rows, n.cols);
    Index ro = 0;
    Index co = 0;
    for (const auto& p : n.parts) {
      m.block(ro, co, p.rows(), p.cols()) = p.to_dense();
      ro += p.rows();
      co += p.cols();
    }
    return m;
  }
  }
  throw Error("LinOp::to_dense: unknown kind");
}

Vector apply(const LinOp& op, const Vector& v) { return op.apply(v); }
Vector apply_adjoint(const LinOp& op, const Vector& w) { return op.apply_adjoint(w); }

SpdSolver::SpdSolver(const Matrix& a) : llt_(a)
{
  if (a.rows() != a.cols()) { throw DimensionError("SPD solve: matrix is not square"); }
  if (llt_.info() != Eigen::Success) { throw SolverError("SPD solve: matrix is not positive definite"); }
  const auto& l = llt_.matrixLLT();
  for (Index i = 0; i < a.rows(); ++i) {
    if (!(l(i, i) > 0.0) || !std::isfinite(l(i, i))) {
      throw SolverError("SPD solve: matrix is not positive definite");
    }
  }
}

Vector SpdSolver::solve(const Vector& rhs) const
{
  require_dim(rhs, dim(), "SPD solve");
  return llt_.solve(rhs);
}

Matrix SpdSolver::solve_many(const Matrix& rhs) const { return llt_.solve(rhs); }

Vector solve_spd(const LinOp& op, const Vector& rhs)
{
  if (op.rows() != op.cols()) { throw DimensionError("solve_spd: operator is not square"); }
  if (auto s = op.scalar_identity()) {
    if (!(*s > 0.0)) { throw SolverError("solve_spd: operator is not positive definite"); }
    require_dim(rhs, op.rows(), "solve_spd");
    return rhs / *s;
  }
  return SpdSolver(op.to_dense()).solve(rhs);
}

Matrix inverse_spd(const Matrix& a)
{
  SpdSolver s(a);
  Matrix inv = s.solve_many(Matrix::Identity(a.rows(), a.cols()));
  return 0.5 * (inv + inv.transpose());
}

bool is_spd(const Matrix& a)
{
  if (a.rows() != a.cols()) { return false; }
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + a.cwiseAbs().maxCoeff())) { return false; }
  Eigen::LLT<Matrix> llt(a);
  return llt.info() == Eigen::Success;
}

double operator_norm(const LinOp& op, std::uint64_t seed, double tol, int max_iters)
{
  Rng rng(seed);
  Vector x = rng.normal_vector(op.cols());
  x.normalize();
  double est = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    Vector y = op.apply_adjoint(op.apply(x));
    const double ny = y.norm();
    if (ny == 0.0) { return 0.0; }
    const double next = std::sqrt(ny);
    x = y / ny;
    if (std::abs(next - est) <= tol * next) { return next; }
    est = next;
  }
  return est;
}

Matrix parse_csv_matrix(std::string_view text, std::string_view source)
{
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) { end = text.size(); }
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') { line.remove_suffix(1); }
    if (line.find_first_not_of(" \t") == std::string_view::npos) {
      if (pos > text.size()) { break; }
      continue;
    }
    std::vector<double> row;
    std::size_t cpos = 0;
    while (true) {
      std::size_t cend = line.find(',', cpos);
      std::string_view cell = line.substr(cpos, cend == std::string_view::npos ? line.size() - cpos : cend - cpos);
      while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) { cell.remove_prefix(1); }
      while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) { cell.remove_suffix(1); }
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
        throw Error(std::string(source) + ": line " + std::to_string(line_no) + ": malformed number '" +
                    std::string(cell) + "'");
      }
      row.push_back(value);
      if (cend == std::string_view::npos) { break; }
      cpos = cend + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(std::string(source) + ": line " + std::to_string(line_no) + ": expected " +
                  std::to_string(rows.front().size()) + " columns, got " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
    if (pos > text.size()) { break; }
  }
  if (rows.empty()) { throw Error(std::string(source) + ": no data rows"); }
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) { m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j]; }
  }
  return m;
}

Matrix load_csv_matrix(const std::string& path)
{
  std::ifstream in(path);
  if (!in) { throw Error("cannot open " + path); }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv_matrix(ss.str(), path);
}

Matrix orthonormal_basis(const Matrix& m, double tol)
{
  if (m.cols() == 0) { return Matrix(m.rows(), 0); }
  Eigen::ColPivHouseholderQR<Matrix> qr(m);
  qr.setThreshold(tol);
  const Index r = qr.rank();
  Matrix q = qr.householderQ() * Matrix::Identity(m.rows(), r);
  return q;
}

Matrix orthogonal_complement(const Matrix& basis, Index dim)
{
  if (basis.cols() == 0) { return Matrix::Identity(dim, dim); }
  Eigen::HouseholderQR<Matrix> qr(basis);
  Matrix full = qr.householderQ() * Matrix::Identity(dim, dim);
  return full.rightCols(dim - basis.cols());
}

} // namespace dualkit
