#include "dualkit/pairings.hpp"

#include <algorithm>
#include <cmath>

#include "dualkit/admm.hpp"
#include "dualkit/correction.hpp"
#include "dualkit/problems.hpp"
#include "dualkit/projsplit.hpp"
#include "dualkit/rng.hpp"

namespace dualkit {

namespace {

const std::vector<PairInfo> kPairs = {
    {"psc-jacobi", "PSC on a space decomposition vs. block Jacobi on the expanded problem",
     "PSC is block Jacobi on the expanded system", false},
    {"ssc-gs", "SSC on a space decomposition vs. block Gauss-Seidel on the expanded problem",
     "SSC is block Gauss-Seidel on the expanded system", false},
    {"neumann-ssc", "von Neumann alternating projections vs. SSC on the affine dual",
     "alternating projections dualize SSC (affine sets)", true},
    {"dykstra-ssc", "Dykstra projections vs. SSC on the support-function dual",
     "Dykstra's algorithm dualizes SSC", true},
    {"parallel-neumann-psc", "parallel projections vs. PSC on the affine dual",
     "parallel projections dualize PSC (affine sets)", true},
    {"parallel-dykstra-psc", "parallel Dykstra vs. PSC on the support-function dual",
     "parallel Dykstra dualizes PSC", true},
    {"prlinear-gs", "linear Peaceman-Rachford vs. block Gauss-Seidel on the dual",
     "linear multi-operator PR dualizes block Gauss-Seidel", true},
    {"genpr-ssc", "generalized Peaceman-Rachford vs. SSC on the Fenchel-Rockafellar dual",
     "generalized PR dualizes SSC", true},
    {"gendr-rssc", "generalized Douglas-Rachford vs. relaxed SSC on the dual",
     "generalized DR dualizes relaxed SSC", true},
    {"pardr-psc", "parallel Douglas-Rachford vs. PSC on the dual", "parallel DR dualizes PSC", true},
    {"admm2-dr", "two-block ADMM vs. Douglas-Rachford on the dual", "two-block ADMM dualizes DR", false},
    {"admmJ-gendr", "dualization-based ADMM vs. generalized DR on the sharing dual",
     "dualization-based ADMM dualizes generalized DR", false},
    {"admmJ-rssc", "dualization-based ADMM vs. relaxed SSC on the sharing energy",
     "dualization-based ADMM matches relaxed SSC on the sharing problem", false},
    {"paradmm-pardr", "parallel dualization-based ADMM vs. parallel DR on the sharing dual",
     "parallel dualization-based ADMM dualizes parallel DR", false},
    {"paradmm-psc", "parallel dualization-based ADMM vs. PSC on the sharing energy",
     "parallel dualization-based ADMM matches PSC on the sharing problem", false},
    {"alm-ppa", "augmented Lagrangian method vs. proximal point on the dual",
     "the augmented Lagrangian method dualizes the proximal point method", false},
};

double diff(const Vector& a, const Vector& b)
{
  if (a.size() != b.size()) { return INFINITY; }
  return (a - b).norm();
}

Vector stacked(const Blocks& b)
{
  Index n = 0;
  for (const auto& v : b) { n += v.size(); }
  Vector out(n);
  Index o = 0;
  for (const auto& v : b) {
    out.segment(o, v.size()) = v;
    o += v.size();
  }
  return out;
}

Blocks split_equal(const Vector& v, int J)
{
  const Index m = v.size() / J;
  Blocks out;
  for (int j = 0; j < J; ++j) { out.push_back(v.segment(j * m, m)); }
  return out;
}

Vector sum_blocks(const Vector& v, int J)
{
  const Index m = v.size() / J;
  Vector s = Vector::Zero(m);
  for (int j = 0; j < J; ++j) { s += v.segment(j * m, m); }
  return s;
}

LinOp stacked_identity(Index d, int J)
{
  return LinOp::vstack(std::vector<LinOp>(static_cast<std::size_t>(J), LinOp::identity(d)));
}

LinOp stacked_terms(const MultiConvexProblem& P)
{
  std::vector<LinOp> ops;
  for (const auto& t : P.terms) { ops.push_back(t.B); }
  return LinOp::vstack(std::move(ops));
}

// −Σ_j B_jᵗp_j for the stacked dual variable.
Vector minus_adjoint_sum(const MultiConvexProblem& P, const Vector& p)
{
  Vector s = Vector::Zero(P.dim());
  Index o = 0;
  for (const auto& t : P.terms) {
    s -= t.B.apply_adjoint(p.segment(o, t.B.rows()));
    o += t.B.rows();
  }
  return s;
}

Relation rel(std::string name, std::function<double(const TraceStep&, const TraceStep&)> fn)
{
  return Relation{std::move(name), std::move(fn)};
}

struct Setup {
  Rng rng;
  SolverConfig cfg;
  LocalSolver ls;

  Setup(const std::string& id, std::uint64_t seed, int iters, int threads) : rng(mix_seed(seed, std::hash<std::string>{}(id) & 0xffffffffu))
  {
    cfg.max_iters = iters;
    cfg.threads = threads;
    cfg.seed = seed;
  }
};

// Relations shared by the primal splitting pairs: u = ∇F*(−ΣB_jᵗp_j) and v_j = −B_jᵗp_j.
std::vector<Relation> splitting_relations(const MultiConvexProblem& P)
{
  return {rel("u = grad F*(-sum B_j^t p_j)",
              [P](const TraceStep& a, const TraceStep& b) {
                return diff(a.var("u"), grad_conjugate(P.F, minus_adjoint_sum(P, b.var("u"))));
              }),
          rel("v_j = -B_j^t p_j", [P](const TraceStep& a, const TraceStep& b) {
            const Vector& p = b.var("u");
            double worst = 0.0;
            Index o = 0;
            for (std::size_t j = 0; j < P.terms.size(); ++j) {
              const auto& B = P.terms[j].B;
              worst = std::max(worst, diff(a.var("v", j), -B.apply_adjoint(p.segment(o, B.rows()))));
              o += B.rows();
            }
            return worst;
          })};
}

MultiConvexProblem splitting_instance(Setup& s, std::uint64_t seed, Blocks& p0)
{
  const bool rof = seed % 2 == 1;
  if (rof) {
    const Index d = s.rng.between(4, 16);
    const RofInstance inst = random_rof(seed, d, s.rng.uniform(0.5, 2.0));
    MultiConvexProblem P = rof_splitting(inst, s.rng.between(1, d - 1));
    for (const auto& t : P.terms) { p0.push_back(s.rng.uniform_vector(t.B.rows(), -0.5, 0.5)); }
    return P;
  }
  const Index d = s.rng.between(2, 12);
  const int J = static_cast<int>(s.rng.between(2, 5));
  MultiConvexProblem P = random_multiconvex(seed, d, J, s.rng.uniform(0.5, 2.0));
  for (const auto& t : P.terms) { p0.push_back(s.rng.normal_vector(t.B.rows())); }
  return P;
}

ErrorTransfer splitting_transfer(const MultiConvexProblem& P, std::function<Trace(int)> rerun)
{
  return ErrorTransfer{P.F, stacked_terms(P), [](const TraceStep& t) { return t.var("u"); },
                       [](const TraceStep& t) { return t.var("u"); }, std::move(rerun)};
}

PairRun pair_expanded(const std::string& id, std::uint64_t seed, int iters, int threads, bool sequential)
{
  Setup s(id, seed, iters, threads);
  const Index d = s.rng.between(3, 10);
  const int J = static_cast<int>(s.rng.between(2, 5));
  const ConvexFn E = ConvexFn::quadratic(random_spd(seed, d, 10.0), s.rng.normal_vector(d));
  std::vector<LinOp> inj;
  for (int j = 0; j < J; ++j) { inj.push_back(LinOp::dense(s.rng.normal_matrix(d, s.rng.between(1, d)))); }
  const Decomposition dec(inj);
  const ExpandedProblem ex = expand_problem(E, dec);
  const Vector w0 = s.rng.normal_vector(ex.sum.cols());
  const Vector u0 = ex.sum.apply(w0);
  PairRun run;
  run.info = find_pair(id);
  s.cfg.tau = 1.0 / J;
  if (sequential) {
    run.primal = ssc(E, dec, s.ls, s.cfg, u0);
    run.dual = block_gauss_seidel(ex.energy, ex.blocks, s.ls, s.cfg, w0);
  } else {
    run.primal = psc(E, dec, s.ls, s.cfg, u0);
    run.dual = block_jacobi(ex.energy, ex.blocks, s.ls, s.cfg, w0);
  }
  const LinOp sum = ex.sum;
  run.spec.theorem_id = run.info.theorem;
  run.spec.fractional = sequential;
  run.spec.relations = {rel("u = sum R_j u_j", [sum](const TraceStep& a, const TraceStep& b) {
    return diff(a.var("u"), sum.apply(b.var("u")));
  })};
  return run;
}

PairRun pair_pocs(const std::string& id, std::uint64_t seed, int iters, int threads, bool affine, bool parallel)
{
  Setup s(id, seed, iters, threads);
  const Index d = s.rng.between(2, 10);
  const int J = static_cast<int>(s.rng.between(2, 5));
  const PocsProblem P = affine ? random_affine_pocs(seed, d, J) : random_pocs(seed, d, J);
  const DualSetup D = affine ? affine_pocs_dual(P) : dykstra_dual(P);
  if (parallel) { s.cfg.tau = 1.0 / J; }
  PairRun run;
  run.info = find_pair(id);
  if (affine) {
    run.primal = parallel ? parallel_von_neumann(P, s.cfg) : von_neumann(P, s.cfg);
  } else {
    run.primal = parallel ? parallel_dykstra(P, s.cfg) : dykstra(P, s.cfg);
  }
  auto dual_run = [D, cfg = s.cfg, ls = s.ls, parallel](int n) {
    SolverConfig c = cfg;
    c.max_iters = n;
    return parallel ? psc(D.energy, D.decomposition, ls, c, D.p0) : ssc(D.energy, D.decomposition, ls, c, D.p0);
  };
  run.dual = dual_run(iters);
  run.spec.theorem_id = run.info.theorem;
  run.spec.fractional = !parallel;
  const Vector f = P.f;
  if (affine) {
    run.spec.relations = {rel("u = f - p", [f](const TraceStep& a, const TraceStep& b) {
      return diff(a.var("u"), f - b.var("u"));
    })};
    run.transfer = ErrorTransfer{ConvexFn::squared_distance(1.0, f), LinOp::identity(d),
                                 [](const TraceStep& t) { return t.var("u"); },
                                 [](const TraceStep& t) { return t.var("u"); }, dual_run};
  } else {
    run.spec.relations = {rel("u = f - sum p_j",
                              [f, J](const TraceStep& a, const TraceStep& b) {
                                return diff(a.var("u"), f - sum_blocks(b.var("u"), J));
                              }),
                          rel("q = p", [](const TraceStep& a, const TraceStep& b) {
                            return diff(a.stacked("q"), b.var("u"));
                          })};
    run.transfer = ErrorTransfer{ConvexFn::squared_distance(1.0, f), stacked_identity(d, J),
                                 [](const TraceStep& t) { return t.var("u"); },
                                 [](const TraceStep& t) { return t.var("u"); }, dual_run};
  }
  return run;
}

PairRun pair_prlinear(const std::string& id, std::uint64_t seed, int iters, int threads)
{
  Setup s(id, seed, iters, threads);
  const Index d = s.rng.between(2, 12);
  const int J = static_cast<int>(s.rng.between(2, 5));
  const MultiLinearProblem P = random_multilinear(seed, d, J, 10.0, s.rng.uniform(0.5, 2.0));
  Blocks warm;
  for (int j = 0; j < J; ++j) { warm.push_back(s.rng.normal_vector(d)); }
  const DualSetup D = linear_dual(P, warm);
  PairRun run;
  run.info = find_pair(id);
  run.primal = pr_linear(P, s.cfg, warm);
  auto dual_run = [D, cfg = s.cfg, ls = s.ls](int n) {
    SolverConfig c = cfg;
    c.max_iters = n;
    return ssc(D.energy, D.decomposition, ls, c, D.p0);
  };
  run.dual = dual_run(iters);
  run.spec.theorem_id = run.info.theorem;
  run.spec.fractional = true;
  const auto A = P.A;
  const Vector f = P.f;
  const double alpha = P.alpha;
  Relation pj = rel("p_j = A_j u_j", [A, J](const TraceStep& a, const TraceStep& b) {
    const Blocks p = split_equal(b.var("u"), J);
    double worst = 0.0;
    for (int j = 0; j < J; ++j) {
      worst = std::max(worst, diff(p[static_cast<std::size_t>(j)], A[static_cast<std::size_t>(j)] * a.var("u_recent", static_cast<std::size_t>(j))));
    }
    return worst;
  });
  run.spec.relations = {rel("u = (f - sum p_j)/alpha",
                            [f, alpha, J](const TraceStep& a, const TraceStep& b) {
                              return diff(a.var("u"), (f - sum_blocks(b.var("u"), J)) / alpha);
                            }),
                        pj};
  run.spec.hypothesis = {pj};
  run.transfer = ErrorTransfer{ConvexFn::tilt(ConvexFn::squared_distance(alpha, Vector::Zero(d)), -f),
                               stacked_identity(d, J), [](const TraceStep& t) { return t.var("u"); },
                               [](const TraceStep& t) { return t.var("u"); }, dual_run};
  return run;
}

PairRun pair_splitting(const std::string& id, std::uint64_t seed, int iters, int threads, int kind)
{
  Setup s(id, seed, iters, threads);
  Blocks p0;
  const MultiConvexProblem P = splitting_instance(s, seed, p0);
  const int J = P.size();
  const SplittingStart start = matched_start(P, p0);
  const DualSetup D = convex_dual(P, p0);
  if (kind == 1) { s.cfg.tau = s.rng.uniform(0.3, 1.0); }
  if (kind == 2) { s.cfg.tau = 1.0 / J; }
  PairRun run;
  run.info = find_pair(id);
  if (kind == 0) {
    run.primal = generalized_pr(P, s.ls, s.cfg, start.u0, start.v0);
  } else if (kind == 1) {
    run.primal = generalized_dr(P, s.ls, s.cfg, start.u0, start.v0);
  } else {
    run.primal = parallel_dr(P, s.ls, s.cfg, start.u0, start.v0);
  }
  auto dual_run = [D, cfg = s.cfg, ls = s.ls, kind](int n) {
    SolverConfig c = cfg;
    c.max_iters = n;
    if (kind == 0) { return ssc(D.energy, D.decomposition, ls, c, D.p0); }
    if (kind == 1) { return relaxed_ssc(D.energy, D.decomposition, ls, c, D.p0); }
    return psc(D.energy, D.decomposition, ls, c, D.p0);
  };
  run.dual = dual_run(iters);
  run.spec.theorem_id = run.info.theorem;
  run.spec.fractional = kind == 0;
  run.spec.relations = splitting_relations(P);
  if (kind == 1) {
    run.spec.hypothesis = run.spec.relations;
    run.spec.relations.push_back(rel("v_hat_j = -B_j^t p_hat_j", [P](const TraceStep& a, const TraceStep& b) {
      const Vector& ph = b.var("u_hat");
      double worst = 0.0;
      Index o = 0;
      for (std::size_t j = 0; j < P.terms.size(); ++j) {
        const auto& B = P.terms[j].B;
        worst = std::max(worst, diff(a.var("v_hat", j), -B.apply_adjoint(ph.segment(o, B.rows()))));
        o += B.rows();
      }
      return worst;
    }));
  }
  run.transfer = splitting_transfer(P, dual_run);
  return run;
}

PairRun pair_admm2(const std::string& id, std::uint64_t seed, int iters, int threads)
{
  Setup s(id, seed, iters, threads);
  const double beta = s.rng.uniform(0.5, 2.0);
  const Index d1 = s.rng.between(1, 8), w = s.rng.between(1, 8);
  const ConstrainedProblem P = random_two_block(seed, d1, w, 10.0, beta);
  const Vector q0 = s.rng.normal_vector(w), r0 = s.rng.normal_vector(w);
  PairRun run;
  run.info = find_pair(id);
  run.primal = admm_two_block(P, s.ls, s.cfg, s.rng.normal_vector(d1), (q0 - r0) / beta, r0, DivergenceRule{INFINITY, 0});
  run.dual = dr_dual_two_block(P, s.ls, s.cfg, Vector::Zero(w), q0, r0);
  run.spec.theorem_id = run.info.theorem;
  const ConvexFn F1 = P.blocks[0].F;
  const LinOp B1 = P.blocks[0].B;
  Relation u2 = rel("u2 = (q - r)/beta", [beta](const TraceStep& a, const TraceStep& b) {
    return diff(a.var("u2"), (b.var("q") - b.var("r")) / beta);
  });
  Relation lam = rel("lambda = r", [](const TraceStep& a, const TraceStep& b) { return diff(a.var("lambda"), b.var("r")); });
  run.spec.relations = {u2, lam,
                        rel("fenchel-young F1(u1, -B1^t p)",
                            [F1, B1](const TraceStep& a, const TraceStep& b) {
                              return std::abs(fenchel_young_residual(F1, a.var("u1"), -B1.apply_adjoint(b.var("p"))));
                            }),
                        rel("u1 = grad F1*(-B1^t p)", [F1, B1](const TraceStep& a, const TraceStep& b) {
                          return diff(a.var("u1"), grad_conjugate(F1, -B1.apply_adjoint(b.var("p"))));
                        })};
  run.spec.hypothesis = {u2, lam};
  return run;
}

SharingProblem sharing_instance(Setup& s, std::uint64_t seed)
{
  const int J = static_cast<int>(s.rng.between(2, 4));
  const Index m = s.rng.between(1, 6), w = s.rng.between(1, 6);
  return random_sharing(seed, J, m, w, 10.0, s.rng.uniform(0.5, 2.0));
}

// FY(F_j, u_j, −B_jᵗλ_j) and u_j = ∇F_j*(−B_jᵗλ_j), both read from the ADMM step.
std::vector<Relation> sharing_block_relations(const SharingProblem& P, std::string u_name, std::string dual_name)
{
  auto each = [P, u_name, dual_name](const TraceStep& a, bool fy) {
    double worst = 0.0;
    for (std::size_t j = 0; j < P.terms.size(); ++j) {
      const Vector y = -P.terms[j].B.apply_adjoint(a.var(dual_name, j));
      const Vector& u = a.var(u_name, j);
      const double r = fy ? std::abs(fenchel_young_residual(P.terms[j].F, u, y)) : diff(u, grad_conjugate(P.terms[j].F, y));
      worst = std::max(worst, r);
    }
    return worst;
  };
  return {rel("fenchel-young F_j(" + u_name + "_j, -B_j^t " + dual_name + "_j)",
              [each](const TraceStep& a, const TraceStep&) { return each(a, true); }),
          rel(u_name + "_j = grad F_j*(-B_j^t " + dual_name + "_j)",
              [each](const TraceStep& a, const TraceStep&) { return each(a, false); })};
}

PairRun pair_admm_dual(const std::string& id, std::uint64_t seed, int iters, int threads, bool parallel)
{
  Setup s(id, seed, iters, threads);
  const SharingProblem P = sharing_instance(s, seed);
  const MultiConvexProblem D = sharing_dual(P);
  const Index w = P.g.size();
  Blocks v0;
  for (int j = 0; j < P.size(); ++j) { v0.push_back(s.rng.normal_vector(w)); }
  const Vector lambda0 = s.rng.normal_vector(w);
  s.cfg.tau = parallel ? 1.0 / P.size() : (seed % 2 == 0 ? kDualizationTau : s.rng.uniform(0.2, 1.0));
  PairRun run;
  run.info = find_pair(id);
  const DivergenceRule off{INFINITY, 0};
  if (parallel) {
    run.primal = admm_dualization_parallel(P, s.ls, s.cfg, v0, lambda0, off);
    run.dual = parallel_dr(D, s.ls, s.cfg, lambda0, v0);
  } else {
    run.primal = admm_dualization_based(P, s.ls, s.cfg, v0, lambda0, off);
    run.dual = generalized_dr(D, s.ls, s.cfg, lambda0, v0);
  }
  run.spec.theorem_id = run.info.theorem;
  Relation vq = rel("v = q", [](const TraceStep& a, const TraceStep& b) { return diff(a.stacked("v"), b.stacked("v")); });
  Relation lp = rel("lambda = p", [](const TraceStep& a, const TraceStep& b) { return diff(a.var("lambda"), b.var("u")); });
  run.spec.relations = {vq, lp};
  run.spec.hypothesis = {vq, lp};
  if (parallel) {
    run.spec.relations.push_back(rel("lambda_j = p_j", [](const TraceStep& a, const TraceStep& b) {
      return diff(a.stacked("lambda_parts"), b.stacked("u_parts"));
    }));
    for (auto& r : sharing_block_relations(P, "u", "lambda_parts")) { run.spec.relations.push_back(r); }
  } else {
    run.spec.relations.push_back(rel("lambda_hat = p_hat", [](const TraceStep& a, const TraceStep& b) {
      return diff(a.stacked("lambda_hat"), b.stacked("u_hat"));
    }));
    for (auto& r : sharing_block_relations(P, "u_hat", "lambda_hat")) { run.spec.relations.push_back(r); }
  }
  return run;
}

PairRun pair_admm_sharing(const std::string& id, std::uint64_t seed, int iters, int threads, bool parallel)
{
  Setup s(id, seed, iters, threads);
  const SharingProblem P = sharing_instance(s, seed);
  const SharingEnergy SE = sharing_energy(P);
  Blocks w0, v0;
  Vector lambda0 = -P.g;
  for (const auto& t : P.terms) {
    w0.push_back(s.rng.normal_vector(t.F.dim()));
    v0.push_back(t.B.apply(w0.back()));
    lambda0 += v0.back();
  }
  lambda0 *= P.beta;
  s.cfg.tau = parallel ? 1.0 / P.size() : (seed % 2 == 0 ? kDualizationTau : s.rng.uniform(0.2, 1.0));
  PairRun run;
  run.info = find_pair(id);
  const DivergenceRule off{INFINITY, 0};
  if (parallel) {
    run.primal = admm_dualization_parallel(P, s.ls, s.cfg, v0, lambda0, off);
    run.dual = psc(SE.energy, SE.decomposition, s.ls, s.cfg, stacked(w0));
  } else {
    run.primal = admm_dualization_based(P, s.ls, s.cfg, v0, lambda0, off);
    run.dual = relaxed_ssc(SE.energy, SE.decomposition, s.ls, s.cfg, stacked(w0));
  }
  run.spec.theorem_id = run.info.theorem;
  const Decomposition dec = SE.decomposition;
  run.spec.relations = {rel("lambda = beta(sum B_j w_j - g)",
                            [P, dec](const TraceStep& a, const TraceStep& b) {
                              const Blocks w = dec.split(b.var("u"));
                              Vector r = -P.g;
                              for (std::size_t j = 0; j < w.size(); ++j) { r += P.terms[j].B.apply(w[j]); }
                              return diff(a.var("lambda"), P.beta * r);
                            }),
                        rel("v_j = B_j w_j", [P, dec](const TraceStep& a, const TraceStep& b) {
                          const Blocks w = dec.split(b.var("u"));
                          double worst = 0.0;
                          for (std::size_t j = 0; j < w.size(); ++j) {
                            worst = std::max(worst, diff(a.var("v", j), P.terms[j].B.apply(w[j])));
                          }
                          return worst;
                        })};
  return run;
}

PairRun pair_alm(const std::string& id, std::uint64_t seed, int iters, int threads)
{
  Setup s(id, seed, iters, threads);
  const Index d = s.rng.between(1, 10);
  const Index w = s.rng.between(1, d);
  const ConstrainedProblem P = random_constrained(seed, 1, d, w, 10.0, s.rng.uniform(0.5, 2.0));
  const Vector lambda0 = s.rng.normal_vector(w);
  PairRun run;
  run.info = find_pair(id);
  run.primal = alm(P, s.ls, s.cfg, s.rng.normal_vector(d), lambda0, DivergenceRule{INFINITY, 0});
  run.dual = proximal_point(alm_dual_energy(P), P.beta, s.ls, s.cfg, lambda0);
  run.spec.theorem_id = run.info.theorem;
  const ConvexFn F = P.blocks[0].F;
  const LinOp B = P.blocks[0].B;
  Relation lp = rel("lambda = p", [](const TraceStep& a, const TraceStep& b) { return diff(a.var("lambda"), b.var("p")); });
  run.spec.relations = {lp, rel("u = grad F*(-B^t p)", [F, B](const TraceStep& a, const TraceStep& b) {
                          return diff(a.var("u"), grad_conjugate(F, -B.apply_adjoint(b.var("p"))));
                        })};
  run.spec.hypothesis = {lp};
  return run;
}

} // namespace

const std::vector<PairInfo>& pair_registry() { return kPairs; }

const PairInfo& find_pair(const std::string& id)
{
  for (const auto& p : kPairs) {
    if (p.id == id) { return p; }
  }
  throw Error("unknown pair id '" + id + "'");
}

PairRun run_pair(const std::string& id, std::uint64_t seed, int iters, int threads)
{
  find_pair(id);
  if (iters <= 0) { throw Error("pair runs need at least one iteration"); }
  if (id == "psc-jacobi") { return pair_expanded(id, seed, iters, threads, false); }
  if (id == "ssc-gs") { return pair_expanded(id, seed, iters, threads, true); }
  if (id == "neumann-ssc") { return pair_pocs(id, seed, iters, threads, true, false); }
  if (id == "dykstra-ssc") { return pair_pocs(id, seed, iters, threads, false, false); }
  if (id == "parallel-neumann-psc") { return pair_pocs(id, seed, iters, threads, true, true); }
  if (id == "parallel-dykstra-psc") { return pair_pocs(id, seed, iters, threads, false, true); }
  if (id == "prlinear-gs") { return pair_prlinear(id, seed, iters, threads); }
  if (id == "genpr-ssc") { return pair_splitting(id, seed, iters, threads, 0); }
  if (id == "gendr-rssc") { return pair_splitting(id, seed, iters, threads, 1); }
  if (id == "pardr-psc") { return pair_splitting(id, seed, iters, threads, 2); }
  if (id == "admm2-dr") { return pair_admm2(id, seed, iters, threads); }
  if (id == "admmJ-gendr") { return pair_admm_dual(id, seed, iters, threads, false); }
  if (id == "admmJ-rssc") { return pair_admm_sharing(id, seed, iters, threads, false); }
  if (id == "paradmm-pardr") { return pair_admm_dual(id, seed, iters, threads, true); }
  if (id == "paradmm-psc") { return pair_admm_sharing(id, seed, iters, threads, true); }
  return pair_alm(id, seed, iters, threads);
}

DualizationReport verify_pair(const std::string& id, std::uint64_t seed, int iters, double tol, int threads)
{
  const PairRun run = run_pair(id, seed, iters, threads);
  return verify_dualization(run.primal, run.dual, run.spec, tol);
}

TransferReport check_error_transfer(const PairRun& run, int reference_iters, double tol)
{
  if (!run.transfer) { throw Error("pair '" + run.info.id + "' has no error-transfer setup"); }
  const ErrorTransfer& t = *run.transfer;
  const Trace ref = t.rerun_dual(reference_iters);
  const Vector p_star = t.dual_p(ref.last());
  const Vector u_star = grad_conjugate(t.F, -t.B.apply_adjoint(p_star));
  const double factor = operator_norm(t.B) / t.F.strong_convexity();
  TransferReport rep;
  rep.min_slack = INFINITY;
  for (const TraceStep* ps : run.primal.iterates()) {
    if (ps->iter == 0) { continue; }
    const Vector p = t.dual_p(run.dual.iterate(ps->iter));
    const double bound = factor * (p - p_star).norm();
    const double err = (t.primal_u(*ps) - u_star).norm();
    rep.slack.push_back(bound - err);
    rep.min_slack = std::min(rep.min_slack, bound - err);
  }
  rep.iterations = static_cast<int>(rep.slack.size());
  rep.pass = rep.min_slack >= -tol;
  return rep;
}

} // namespace dualkit
