#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dualkit/error.hpp"

namespace dualkit {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Vectors are plain Eigen values; finiteness is enforced where data enters the library.
Vector make_vector(std::initializer_list<double> values);
Vector make_vector(const std::vector<double>& values);
void require_finite(const Vector& v, std::string_view what);
void require_dim(const Vector& v, Index dim, std::string_view what);

namespace detail {
struct OpNode;
}

class LinOp {
public:
  enum class Kind { dense, identity, scaling, vstack, hcat, block_diagonal, forward_difference, composition, adjoint };

  static LinOp dense(Matrix m);
  static LinOp identity(Index n);
  static LinOp scaling(Index n, double s);
  static LinOp vstack(std::vector<LinOp> parts);
  static LinOp hcat(std::vector<LinOp> parts);
  static LinOp block_diagonal(std::vector<LinOp> parts);
  static LinOp forward_difference(Index d);
  // outer ∘ inner
  static LinOp compose(LinOp outer, LinOp inner);

  LinOp adjoint() const;

  Kind kind() const;
  Index rows() const; // codomain dimension
  Index cols() const; // domain dimension
  const std::vector<LinOp>& parts() const;

  Vector apply(const Vector& v) const;
  Vector apply_adjoint(const Vector& w) const;
  Matrix to_dense() const;

  // s when the operator is structurally s·I
  std::optional<double> scalar_identity() const;

private:
  explicit LinOp(std::shared_ptr<const detail::OpNode> node);
  std::shared_ptr<const detail::OpNode> node_;
};

Vector apply(const LinOp& op, const Vector& v);
Vector apply_adjoint(const LinOp& op, const Vector& w);

// Cholesky factorization reused across right-hand sides.
class SpdSolver {
public:
  explicit SpdSolver(const Matrix& a);
  Vector solve(const Vector& rhs) const;
  Matrix solve_many(const Matrix& rhs) const;
  Index dim() const { return llt_.rows(); }

private:
  Eigen::LLT<Matrix> llt_;
};

Vector solve_spd(const LinOp& op, const Vector& rhs);
Matrix inverse_spd(const Matrix& a);
bool is_spd(const Matrix& a);

// Largest singular value by power iteration on AᵗA from a seeded start vector.
double operator_norm(const LinOp& op, std::uint64_t seed = 0x5eedULL, double tol = 1e-10, int max_iters = 10000);

Matrix load_csv_matrix(const std::string& path);
Matrix parse_csv_matrix(std::string_view text, std::string_view source = "<memory>");

// Orthonormal basis of the span of the columns of m and of its orthogonal complement.
Matrix orthonormal_basis(const Matrix& m, double tol = 1e-12);
Matrix orthogonal_complement(const Matrix& basis, Index dim);

} // namespace dualkit
