#include "dualkit/duality.hpp"

#include <algorithm>
#include <cmath>

namespace dualkit {

PrimalDualProblem::PrimalDualProblem(ConvexFn F, ConvexFn G, LinOp B)
    : F_(std::move(F)), G_(std::move(G)), B_(std::move(B))
{
  if (B_.cols() != F_.dim()) {
    throw DimensionError("primal-dual problem: B has domain dim " + std::to_string(B_.cols()) + " but F has dim " +
                         std::to_string(F_.dim()));
  }
  if (B_.rows() != G_.dim()) {
    throw DimensionError("primal-dual problem: B has codomain dim " + std::to_string(B_.rows()) +
                         " but G has dim " + std::to_string(G_.dim()));
  }
}

void PrimalDualProblem::check_proper(const Vector& witness) const
{
  if (!std::isfinite(eval(F_, witness))) { throw Error("primal-dual problem: F is +inf at the witness point"); }
}

PrimalDualProblem dual_problem(const PrimalDualProblem& P)
{
  LinOp minus_bt = LinOp::compose(LinOp::scaling(P.B().cols(), -1.0), P.B().adjoint());
  return PrimalDualProblem(conjugate(P.G()), conjugate(P.F()), minus_bt);
}

ConvexFn objective(const PrimalDualProblem& P)
{
  return ConvexFn::sum({P.F(), ConvexFn::precompose(P.G(), P.B())});
}

double primal_value(const PrimalDualProblem& P, const Vector& u)
{
  return ext_add(eval(P.F(), u), eval(P.G(), P.B().apply(u)));
}

Vector recover_primal(const PrimalDualProblem& P, const Vector& p)
{
  if (!(P.F().strong_convexity() > 0.0)) {
    throw Error("recover_primal: F is not strongly convex: " + P.F().describe());
  }
  return grad_conjugate(P.F(), -P.B().apply_adjoint(p));
}

double duality_gap(const PrimalDualProblem& P, const Vector& u, const Vector& p)
{
  const double f = eval(P.F(), u);
  const double g = eval(P.G(), P.B().apply(u));
  const double fs = eval(conjugate(P.F()), -P.B().apply_adjoint(p));
  const double gs = eval(conjugate(P.G()), p);
  const std::pair<const char*, double> terms[] = {{"F(u)", f}, {"G(Bu)", g}, {"F*(-B^t p)", fs}, {"G*(p)", gs}};
  for (const auto& [name, v] : terms) {
    if (!std::isfinite(v)) { throw Error(std::string("duality_gap: ") + name + " is not finite"); }
  }
  return (f + g) + (fs + gs);
}

double error_transfer_bound(const PrimalDualProblem& P, const Vector& p, const Vector& p_star, double mu)
{
  if (!(mu > 0.0)) { throw Error("error_transfer_bound: mu must be positive"); }
  return operator_norm(P.B()) / mu * (p - p_star).norm();
}

nlohmann::json DualizationReport::to_json() const
{
  nlohmann::json j;
  j["theorem_id"] = theorem_id;
  j["iterations"] = iterations;
  nlohmann::json res = nlohmann::json::array();
  for (const auto& r : residuals) {
    nlohmann::json e = r;
    for (const char* key : {"iter", "sub"}) {
      if (r.count(key) != 0) { e[key] = static_cast<int>(r.at(key)); }
    }
    res.push_back(e);
  }
  j["residuals"] = res;
  j["max_residual"] = max_residual;
  j["tolerance"] = tolerance;
  j["pass"] = pass;
  return j;
}

namespace {

const TraceStep* find_step(const Trace& t, int iter, int sub)
{
  for (const auto& s : t.steps) {
    if (s.iter == iter && s.sub == sub) { return &s; }
  }
  return nullptr;
}

} // namespace

DualizationReport verify_dualization(const Trace& primal, const Trace& dual, const RelationSpec& spec, double tol)
{
  if (primal.iterations() != dual.iterations()) {
    throw Error("verify_dualization: primal run has " + std::to_string(primal.iterations()) +
                " iterations, dual run has " + std::to_string(dual.iterations()));
  }
  if (primal.iterations() == 0) { throw Error("verify_dualization: no iterations to compare"); }
  const auto& hyp = spec.hypothesis.empty() ? spec.relations : spec.hypothesis;
  const TraceStep& p0 = primal.iterate(0);
  const TraceStep& d0 = dual.iterate(0);
  for (const auto& r : hyp) {
    const double v = r.residual(p0, d0);
    if (!(v <= spec.hypothesis_tol)) {
      throw Error("verify_dualization: initial configuration violates '" + r.name + "' (residual " +
                  std::to_string(v) + "); the hypothesis of " + spec.theorem_id + " fails");
    }
  }
  DualizationReport rep;
  rep.theorem_id = spec.theorem_id;
  rep.iterations = primal.iterations();
  rep.tolerance = tol;
  for (const auto& ps : primal.steps) {
    if ((ps.iter == 0 && ps.sub == 0) || (ps.sub != 0 && !spec.fractional)) { continue; }
    const TraceStep* ds = find_step(dual, ps.iter, ps.sub);
    if (!ds) {
      if (ps.sub != 0) { continue; }
      throw Error("verify_dualization: dual run lacks iterate " + std::to_string(ps.iter));
    }
    std::map<std::string, double> row;
    row["iter"] = ps.iter;
    row["sub"] = ps.sub;
    for (const auto& r : spec.relations) {
      const double v = r.residual(ps, *ds);
      row[r.name] = v;
      rep.max_residual = std::isnan(v) ? INFINITY : std::max(rep.max_residual, v);
    }
    rep.residuals.push_back(std::move(row));
  }
  rep.pass = rep.max_residual <= tol;
  return rep;
}

} // namespace dualkit
