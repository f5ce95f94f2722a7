#include "dualkit/problems.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dualkit/rng.hpp"

namespace dualkit {

void RofInstance::validate() const
{
  if (f.size() < 2) { throw DimensionError("ROF instance: signal length must be at least 2"); }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) { throw Error("ROF instance: alpha must be positive"); }
  require_finite(f, "ROF signal");
}

PrimalDualProblem rof_primal_dual(const RofInstance& inst)
{
  inst.validate();
  const Index d = inst.dim();
  return PrimalDualProblem(ConvexFn::squared_distance(inst.alpha, inst.f), ConvexFn::l1(d),
                           LinOp::forward_difference(d));
}

Decomposition rof_decomposition(const RofInstance& inst, Index d1)
{
  inst.validate();
  if (d1 < 1 || d1 >= inst.dim()) {
    throw Error("ROF split index must satisfy 1 <= d1 < d, got d1 = " + std::to_string(d1) + " for d = " +
                std::to_string(inst.dim()));
  }
  return Decomposition::blocks({d1, inst.dim() - d1});
}

MultiConvexProblem rof_splitting(const RofInstance& inst, Index d1)
{
  rof_decomposition(inst, d1);
  const Index d = inst.dim();
  const Matrix D = LinOp::forward_difference(d).to_dense();
  MultiConvexProblem P{ConvexFn::squared_distance(inst.alpha, inst.f), {}};
  P.terms.push_back(ConvexTerm{ConvexFn::l1(d1), LinOp::dense(D.topRows(d1))});
  P.terms.push_back(ConvexTerm{ConvexFn::l1(d - d1), LinOp::dense(D.bottomRows(d - d1))});
  return P;
}

Vector rof_recover(const RofInstance& inst, const Vector& p)
{
  require_dim(p, inst.dim(), "ROF dual point");
  return inst.f - LinOp::forward_difference(inst.dim()).apply_adjoint(p) / inst.alpha;
}

RofInstance random_rof(std::uint64_t seed, Index d, double alpha)
{
  Rng rng(mix_seed(seed, 0x70f));
  RofInstance inst;
  inst.alpha = alpha;
  inst.f.resize(d);
  double level = rng.uniform(-1.0, 1.0);
  for (Index i = 0; i < d; ++i) {
    if (rng.uniform() < 0.2) { level = rng.uniform(-1.0, 1.0); }
    inst.f(i) = level + 0.1 * rng.normal();
  }
  return inst;
}

void LogisticInstance::validate() const
{
  if (x.empty()) { throw Error("logistic instance: no samples"); }
  if (x.size() != y.size()) { throw DimensionError("logistic instance: features and labels differ in count"); }
  if (k < 2) { throw Error("logistic instance: needs at least two classes"); }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) { throw Error("logistic instance: alpha must be positive"); }
  for (std::size_t j = 0; j < x.size(); ++j) {
    require_dim(x[j], features(), "logistic sample");
    require_finite(x[j], "logistic sample");
    if (y[j] < 1 || y[j] > k) {
      throw Error("logistic instance: sample " + std::to_string(j + 1) + " has label " + std::to_string(y[j]) +
                  " outside 1.." + std::to_string(k));
    }
  }
}

LogisticInstance parse_logistic_csv(std::string_view text, double alpha, bool header, int k, std::string_view source)
{
  std::string body(text);
  if (header) {
    const auto first = body.find_first_not_of(" \t\r\n");
    if (first != std::string::npos) {
      const auto eol = body.find('\n', first);
      body.replace(first, (eol == std::string::npos ? body.size() : eol) - first, "");
    }
  }
  const Matrix m = parse_csv_matrix(body, source);
  if (m.cols() < 2) { throw Error(std::string(source) + ": need at least one feature column and a label column"); }
  LogisticInstance inst;
  inst.alpha = alpha;
  int max_label = 0;
  for (Index r = 0; r < m.rows(); ++r) {
    const double label = m(r, m.cols() - 1);
    if (label != std::floor(label) || label < 1.0) {
      throw Error(std::string(source) + ": data row " + std::to_string(r + 1) + ": label " + std::to_string(label) +
                  " is not an integer >= 1");
    }
    if (k > 0 && label > k) {
      throw Error(std::string(source) + ": data row " + std::to_string(r + 1) + ": label " +
                  std::to_string(static_cast<int>(label)) + " outside 1.." + std::to_string(k));
    }
    inst.x.push_back(m.row(r).head(m.cols() - 1).transpose());
    inst.y.push_back(static_cast<int>(label));
    max_label = std::max(max_label, static_cast<int>(label));
  }
  inst.k = k > 0 ? k : std::max(2, max_label);
  inst.validate();
  return inst;
}

LogisticInstance logistic_from_csv(const std::string& path, double alpha, bool header, int k)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) { throw Error("cannot open CSV file '" + path + "'"); }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_logistic_csv(ss.str(), alpha, header, k, path);
}

LinOp logistic_design(const LogisticInstance& inst, int j)
{
  const Index d1 = inst.features() + 1;
  Matrix X = Matrix::Zero(inst.dim(), inst.k);
  Vector col(d1);
  col.head(d1 - 1) = inst.x.at(static_cast<std::size_t>(j));
  col(d1 - 1) = 1.0;
  for (int i = 0; i < inst.k; ++i) { X.block(i * d1, i, d1, 1) = col; }
  return LinOp::dense(std::move(X));
}

Vector logistic_target(const LogisticInstance& inst)
{
  const Index d1 = inst.features() + 1;
  Vector xh = Vector::Zero(inst.dim());
  for (int j = 0; j < inst.size(); ++j) {
    const Index o = (inst.y[static_cast<std::size_t>(j)] - 1) * d1;
    xh.segment(o, d1 - 1) += inst.x[static_cast<std::size_t>(j)];
    xh(o + d1 - 1) += 1.0;
  }
  return xh;
}

MultiConvexProblem logistic_problem(const LogisticInstance& inst)
{
  inst.validate();
  const double scale = inst.size() * inst.alpha;
  MultiConvexProblem P{ConvexFn::tilt(ConvexFn::squared_distance(scale, Vector::Zero(inst.dim())), -logistic_target(inst)),
                       {}};
  for (int j = 0; j < inst.size(); ++j) {
    P.terms.push_back(ConvexTerm{ConvexFn::log_sum_exp(inst.k), logistic_design(inst, j).adjoint()});
  }
  return P;
}

double logistic_objective(const LogisticInstance& inst, const Vector& theta)
{
  require_dim(theta, inst.dim(), "logistic parameters");
  const ConvexFn lse = ConvexFn::log_sum_exp(inst.k);
  double v = 0.5 * inst.size() * inst.alpha * theta.squaredNorm() - logistic_target(inst).dot(theta);
  for (int j = 0; j < inst.size(); ++j) { v += eval(lse, logistic_design(inst, j).apply_adjoint(theta)); }
  return v;
}

Vector logistic_gradient(const LogisticInstance& inst, const Vector& theta)
{
  require_dim(theta, inst.dim(), "logistic parameters");
  const ConvexFn lse = ConvexFn::log_sum_exp(inst.k);
  Vector g = inst.size() * inst.alpha * theta - logistic_target(inst);
  for (int j = 0; j < inst.size(); ++j) {
    const LinOp X = logistic_design(inst, j);
    g += X.apply(grad(lse, X.apply_adjoint(theta)));
  }
  return g;
}

Blocks logistic_dual_start(const LogisticInstance& inst)
{
  return Blocks(static_cast<std::size_t>(inst.size()), Vector::Constant(inst.k, 1.0 / inst.k));
}

LogisticInstance random_logistic(std::uint64_t seed, int N, Index d, int k, double alpha)
{
  Rng rng(mix_seed(seed, 0x1091));
  LogisticInstance inst;
  inst.k = k;
  inst.alpha = alpha;
  const Matrix W = rng.normal_matrix(k, d);
  for (int j = 0; j < N; ++j) {
    Vector x = rng.normal_vector(d);
    Vector s = W * x + 0.5 * rng.normal_vector(k);
    Index best = 0;
    s.maxCoeff(&best);
    inst.x.push_back(std::move(x));
    inst.y.push_back(static_cast<int>(best) + 1);
  }
  inst.validate();
  return inst;
}

Matrix random_spd(std::uint64_t seed, Index dim, double cond)
{
  if (!(cond >= 1.0)) { throw Error("random_spd: condition number must be at least 1"); }
  if (cond == 1.0) { return Matrix::Identity(dim, dim); }
  Rng rng(mix_seed(seed, 0x5bd));
  Eigen::HouseholderQR<Matrix> qr(rng.normal_matrix(dim, dim));
  const Matrix Q = qr.householderQ() * Matrix::Identity(dim, dim);
  Vector lambda(dim);
  for (Index i = 0; i < dim; ++i) {
    lambda(i) = dim == 1 ? 1.0 : std::pow(cond, static_cast<double>(i) / static_cast<double>(dim - 1));
  }
  Matrix A = Q * lambda.asDiagonal() * Q.transpose();
  return 0.5 * (A + A.transpose());
}

MultiLinearProblem random_multilinear(std::uint64_t seed, Index dim, int J, double cond, double alpha)
{
  Rng rng(mix_seed(seed, 0x111));
  MultiLinearProblem P;
  P.alpha = alpha;
  for (int j = 0; j < J; ++j) { P.A.push_back(random_spd(mix_seed(seed, 0x200 + static_cast<std::uint64_t>(j)), dim, cond)); }
  P.f = rng.normal_vector(dim);
  return P;
}

ConstrainedProblem random_constrained(std::uint64_t seed, int J, Index block_dim, Index w, double cond, double beta)
{
  Rng rng(mix_seed(seed, 0xc0a));
  ConstrainedProblem P;
  P.beta = beta;
  P.g = Vector::Zero(w);
  for (int j = 0; j < J; ++j) {
    Matrix A = random_spd(mix_seed(seed, 0x300 + static_cast<std::uint64_t>(j)), block_dim, cond);
    Vector f = rng.normal_vector(block_dim);
    Matrix B = rng.normal_matrix(w, block_dim);
    P.g += B * rng.normal_vector(block_dim);
    P.blocks.push_back(AdmmBlock{ConvexFn::quadratic(std::move(A), std::move(f)), LinOp::dense(std::move(B))});
  }
  return P;
}

SharingProblem random_sharing(std::uint64_t seed, int J, Index block_dim, Index w, double cond, double beta)
{
  Rng rng(mix_seed(seed, 0x5a4));
  SharingProblem P;
  P.beta = beta;
  for (int j = 0; j < J; ++j) {
    Matrix A = random_spd(mix_seed(seed, 0x400 + static_cast<std::uint64_t>(j)), block_dim, cond);
    Vector f = rng.normal_vector(block_dim);
    P.terms.push_back(AdmmBlock{ConvexFn::quadratic(std::move(A), std::move(f)), LinOp::dense(rng.normal_matrix(w, block_dim))});
  }
  P.g = rng.normal_vector(w);
  return P;
}

ConstrainedProblem random_two_block(std::uint64_t seed, Index d1, Index w, double cond, double beta)
{
  Rng rng(mix_seed(seed, 0x2b1));
  ConstrainedProblem P;
  P.beta = beta;
  Vector f1 = rng.normal_vector(d1);
  Vector f2 = rng.normal_vector(w);
  P.blocks.push_back(AdmmBlock{ConvexFn::quadratic(random_spd(mix_seed(seed, 0x501), d1, cond), std::move(f1)),
                               LinOp::dense(rng.normal_matrix(w, d1))});
  P.blocks.push_back(AdmmBlock{ConvexFn::quadratic(random_spd(mix_seed(seed, 0x502), w, cond), std::move(f2)),
                               LinOp::scaling(w, -1.0)});
  P.g = rng.normal_vector(w);
  return P;
}

MultiConvexProblem random_multiconvex(std::uint64_t seed, Index dim, int J, double alpha)
{
  Rng rng(mix_seed(seed, 0x3c7));
  MultiConvexProblem P{ConvexFn::squared_distance(alpha, rng.normal_vector(dim)), {}};
  for (int j = 0; j < J; ++j) {
    const Index m = rng.between(1, dim);
    Matrix A = random_spd(mix_seed(seed, 0x600 + static_cast<std::uint64_t>(j)), m, 4.0);
    Vector b = rng.normal_vector(m);
    P.terms.push_back(ConvexTerm{ConvexFn::quadratic(std::move(A), std::move(b)), LinOp::dense(rng.normal_matrix(m, dim))});
  }
  return P;
}

PocsProblem random_pocs(std::uint64_t seed, Index dim, int J)
{
  Rng rng(mix_seed(seed, 0x9c5));
  PocsProblem P;
  const Vector c = rng.normal_vector(dim);
  for (int j = 0; j < J; ++j) {
    if (j % 2 == 0) {
      Vector lo(dim), hi(dim);
      for (Index i = 0; i < dim; ++i) {
        lo(i) = c(i) - rng.uniform(0.1, 1.0);
        hi(i) = c(i) + rng.uniform(0.1, 1.0);
      }
      P.sets.push_back(ConvexSet::box(std::move(lo), std::move(hi)));
    } else {
      Vector a = rng.normal_vector(dim);
      const double b = a.dot(c) + rng.uniform(0.0, 0.5);
      P.sets.push_back(ConvexSet::halfspace(std::move(a), b));
    }
  }
  P.f = c + 3.0 * rng.normal_vector(dim);
  P.common_point = c;
  return P;
}

PocsProblem random_affine_pocs(std::uint64_t seed, Index dim, int J)
{
  if (dim < 2) { throw DimensionError("random_affine_pocs: dimension must be at least 2"); }
  Rng rng(mix_seed(seed, 0xaff));
  PocsProblem P;
  const Vector c = rng.normal_vector(dim);
  for (int j = 0; j < J; ++j) {
    const Index k = rng.between(1, dim - 1);
    P.sets.push_back(ConvexSet::affine(rng.normal_matrix(dim, k), c));
  }
  P.f = c + 2.0 * rng.normal_vector(dim);
  P.common_point = c;
  return P;
}

PocsProblem two_lines()
{
  PocsProblem P;
  const Vector c = make_vector({1.0, 1.0});
  Matrix d1(2, 1), d2(2, 1);
  d1 << 1.0, 0.0;
  d2 << 1.0, 1.0;
  P.sets.push_back(ConvexSet::affine(d1, c));
  P.sets.push_back(ConvexSet::affine(d2, c));
  P.f = make_vector({3.0, 2.0});
  P.common_point = c;
  return P;
}

PocsProblem box_halfspace(std::uint64_t seed, Index dim)
{
  Rng rng(mix_seed(seed, 0xb0b));
  PocsProblem P;
  P.sets.push_back(ConvexSet::box(Vector::Constant(dim, -1.0), Vector::Constant(dim, 1.0)));
  Vector a = rng.normal_vector(dim);
  const double b = 0.3 * a.norm();
  P.sets.push_back(ConvexSet::halfspace(std::move(a), b));
  P.f = 2.5 * rng.normal_vector(dim);
  P.common_point = Vector::Zero(dim);
  return P;
}

namespace {

std::vector<Matrix> chyy_columns()
{
  Matrix a1(3, 1), a2(3, 1), a3(3, 1);
  a1 << 1.0, 1.0, 1.0;
  a2 << 1.0, 1.0, 2.0;
  a3 << 1.0, 2.0, 2.0;
  return {a1, a2, a3};
}

} // namespace

ConstrainedProblem chyy_witness()
{
  ConstrainedProblem P;
  P.beta = 1.0;
  P.g = Vector::Zero(3);
  for (auto& a : chyy_columns()) { P.blocks.push_back(AdmmBlock{ConvexFn::zero(1), LinOp::dense(std::move(a))}); }
  return P;
}

SharingProblem chyy_sharing()
{
  SharingProblem P;
  P.beta = 1.0;
  P.g = Vector::Zero(3);
  for (auto& a : chyy_columns()) { P.terms.push_back(AdmmBlock{ConvexFn::zero(1), LinOp::dense(std::move(a))}); }
  return P;
}

Vector vector_from_json(const nlohmann::json& j, std::string_view what)
{
  if (!j.is_array()) { throw Error(std::string(what) + ": expected an array of numbers"); }
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) { throw Error(std::string(what) + ": entry " + std::to_string(i) + " is not a number"); }
    v(static_cast<Index>(i)) = j[i].get<double>();
  }
  require_finite(v, what);
  return v;
}

nlohmann::json to_json(const Matrix& m)
{
  nlohmann::json rows = nlohmann::json::array();
  for (Index r = 0; r < m.rows(); ++r) { rows.push_back(to_json(Vector(m.row(r).transpose()))); }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j, std::string_view what)
{
  if (!j.is_array() || j.empty()) { throw Error(std::string(what) + ": expected a nonempty array of rows"); }
  std::vector<Vector> rows;
  for (std::size_t r = 0; r < j.size(); ++r) {
    rows.push_back(vector_from_json(j[r], std::string(what) + " row " + std::to_string(r)));
    if (rows.back().size() != rows.front().size()) { throw DimensionError(std::string(what) + ": ragged rows"); }
  }
  Matrix m(static_cast<Index>(rows.size()), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) { m.row(static_cast<Index>(r)) = rows[r].transpose(); }
  return m;
}

nlohmann::json to_json(const ConvexSet& K)
{
  switch (K.kind()) {
  case ConvexSet::Kind::box: return {{"kind", "box"}, {"lo", to_json(K.lower())}, {"hi", to_json(K.upper())}};
  case ConvexSet::Kind::halfspace: return {{"kind", "halfspace"}, {"a", to_json(K.normal())}, {"b", K.level()}};
  case ConvexSet::Kind::affine: {
    nlohmann::json basis = nlohmann::json::array();
    for (Index c = 0; c < K.basis().cols(); ++c) { basis.push_back(to_json(Vector(K.basis().col(c)))); }
    return {{"kind", "affine"}, {"directions", basis}, {"offset", to_json(K.offset())}};
  }
  case ConvexSet::Kind::linf_ball: return {{"kind", "linf_ball"}, {"dim", K.dim()}, {"radius", K.radius()}};
  case ConvexSet::Kind::simplex: return {{"kind", "simplex"}, {"dim", K.dim()}};
  }
  throw Error("unknown set kind");
}

ConvexSet convex_set_from_json(const nlohmann::json& j) try
{
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "box") { return ConvexSet::box(vector_from_json(j.at("lo"), "box lo"), vector_from_json(j.at("hi"), "box hi")); }
  if (kind == "halfspace") { return ConvexSet::halfspace(vector_from_json(j.at("a"), "halfspace a"), j.at("b").get<double>()); }
  if (kind == "affine") {
    const Vector offset = vector_from_json(j.at("offset"), "affine offset");
    const auto& dirs = j.at("directions");
    Matrix basis(offset.size(), static_cast<Index>(dirs.size()));
    for (std::size_t c = 0; c < dirs.size(); ++c) {
      Vector d = vector_from_json(dirs[c], "affine direction");
      require_dim(d, offset.size(), "affine direction");
      basis.col(static_cast<Index>(c)) = d;
    }
    return ConvexSet::affine(basis, offset);
  }
  if (kind == "linf_ball") { return ConvexSet::linf_ball(j.at("dim").get<Index>(), j.at("radius").get<double>()); }
  if (kind == "simplex") { return ConvexSet::simplex(j.at("dim").get<Index>()); }
  throw Error("unknown set kind '" + kind + "'");
} catch (const nlohmann::json::exception& e) {
  throw Error(std::string("convex set: ") + e.what());
}

nlohmann::json to_json(const PocsProblem& P)
{
  nlohmann::json sets = nlohmann::json::array();
  for (const auto& K : P.sets) { sets.push_back(to_json(K)); }
  nlohmann::json j = {{"type", "pocs"}, {"f", to_json(P.f)}, {"sets", sets}};
  if (P.common_point) { j["common_point"] = to_json(*P.common_point); }
  return j;
}

PocsProblem pocs_from_json(const nlohmann::json& j) try
{
  PocsProblem P;
  P.f = vector_from_json(j.at("f"), "POCS f");
  for (const auto& s : j.at("sets")) { P.sets.push_back(convex_set_from_json(s)); }
  if (j.contains("common_point")) { P.common_point = vector_from_json(j.at("common_point"), "POCS common point"); }
  P.validate();
  return P;
} catch (const nlohmann::json::exception& e) {
  throw Error(std::string("POCS problem: ") + e.what());
}

nlohmann::json to_json(const MultiLinearProblem& P)
{
  nlohmann::json A = nlohmann::json::array();
  for (const auto& a : P.A) { A.push_back(to_json(a)); }
  return {{"type", "multilinear"}, {"alpha", P.alpha}, {"f", to_json(P.f)}, {"A", A}};
}

MultiLinearProblem multilinear_from_json(const nlohmann::json& j) try
{
  MultiLinearProblem P;
  P.alpha = j.at("alpha").get<double>();
  P.f = vector_from_json(j.at("f"), "multilinear f");
  for (const auto& a : j.at("A")) { P.A.push_back(matrix_from_json(a, "multilinear A")); }
  P.validate();
  return P;
} catch (const nlohmann::json::exception& e) {
  throw Error(std::string("multi-linear problem: ") + e.what());
}

nlohmann::json to_json(const RofInstance& inst)
{
  return {{"type", "rof"}, {"alpha", inst.alpha}, {"f", to_json(inst.f)}};
}

RofInstance rof_from_json(const nlohmann::json& j) try
{
  RofInstance inst;
  inst.alpha = j.at("alpha").get<double>();
  inst.f = vector_from_json(j.at("f"), "ROF f");
  inst.validate();
  return inst;
} catch (const nlohmann::json::exception& e) {
  throw Error(std::string("ROF instance: ") + e.what());
}

nlohmann::json to_json(const LogisticInstance& inst)
{
  nlohmann::json x = nlohmann::json::array();
  for (const auto& xi : inst.x) { x.push_back(to_json(xi)); }
  return {{"type", "logistic"}, {"alpha", inst.alpha}, {"k", inst.k}, {"x", x}, {"y", inst.y}};
}

LogisticInstance logistic_from_json(const nlohmann::json& j) try
{
  LogisticInstance inst;
  inst.alpha = j.at("alpha").get<double>();
  inst.k = j.at("k").get<int>();
  for (const auto& xi : j.at("x")) { inst.x.push_back(vector_from_json(xi, "logistic sample")); }
  inst.y = j.at("y").get<std::vector<int>>();
  inst.validate();
  return inst;
} catch (const nlohmann::json::exception& e) {
  throw Error(std::string("logistic instance: ") + e.what());
}

nlohmann::json to_json(const ConstrainedProblem& P)
{
  nlohmann::json blocks = nlohmann::json::array();
  for (std::size_t j = 0; j < P.blocks.size(); ++j) {
    auto q = as_quadratic(P.blocks[j].F);
    if (!q) { throw Error("serialization: block " + std::to_string(j) + " is not quadratic"); }
    blocks.push_back({{"A", to_json(q->A)}, {"f", to_json(q->f)}, {"B", to_json(P.blocks[j].B.to_dense())}});
  }
  return {{"type", "constrained"}, {"beta", P.beta}, {"g", to_json(P.g)}, {"blocks", blocks}};
}

ConstrainedProblem constrained_from_json(const nlohmann::json& j) try
{
  ConstrainedProblem P;
  P.beta = j.at("beta").get<double>();
  P.g = vector_from_json(j.at("g"), "constraint g");
  for (const auto& b : j.at("blocks")) {
    P.blocks.push_back(AdmmBlock{ConvexFn::quadratic(matrix_from_json(b.at("A"), "block A"), vector_from_json(b.at("f"), "block f")),
                                 LinOp::dense(matrix_from_json(b.at("B"), "block B"))});
  }
  P.validate();
  return P;
} catch (const nlohmann::json::exception& e) {
  throw Error(std::string("constrained problem: ") + e.what());
}

} // namespace dualkit
