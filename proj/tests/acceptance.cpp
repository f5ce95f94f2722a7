// Runs every acceptance criterion at its stated tolerance and prints one PASS/FAIL line per criterion.
// Exit status is nonzero only when a criterion fails outside the documented expected set.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "convex_suite.hpp"
#include "dualkit/admm.hpp"
#include "dualkit/correction.hpp"
#include "dualkit/pairings.hpp"
#include "dualkit/problems.hpp"
#include "dualkit/projsplit.hpp"
#include "oracles.hpp"

using namespace dualkit;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  // set when the failure is understood and documented in the README
  std::string expected_failure;
};

class Clock {
public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

SolverConfig iters(int n, double tau = 1.0)
{
  SolverConfig cfg;
  cfg.max_iters = n;
  cfg.tau = tau;
  return cfg;
}

// Keeps the largest value seen under a name for the detail line.
struct Worst {
  double value = 0.0;
  void see(double v) { value = std::max(value, v); }
};

Outcome convex_suite()
{
  const Clock clock;
  const auto reports = suite::run(2024, 100);
  const double t = clock.seconds();
  Outcome o;
  int checks = 0, least = 1 << 30;
  for (const auto& [kind, rep] : reports) {
    checks += rep.checks;
    least = std::min(least, rep.samples);
    if (!rep.failures.empty()) {
      o.pass = false;
      o.detail += rep.failures.front() + "; ";
    }
  }
  o.pass = o.pass && least >= 100 && t < 10.0;
  o.detail += fmt::format("{} kinds, >= {} samples each, {} checks, {:.2f} s", reports.size(), least, checks, t);
  return o;
}

Outcome pair_certification()
{
  const Clock clock;
  Outcome o;
  Worst worst;
  for (const auto& p : pair_registry()) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const DualizationReport rep = verify_pair(p.id, seed, 30, 1e-8);
      worst.see(rep.max_residual);
      if (!rep.pass) {
        o.pass = false;
        o.detail += fmt::format("{} seed {}: {:.3g}; ", p.id, seed, rep.max_residual);
      }
    }
  }
  const double t = clock.seconds();
  o.pass = o.pass && t < 60.0;
  o.detail += fmt::format("{} pairs x 20 seeds, max residual {:.3g}, {:.2f} s", pair_registry().size(), worst.value, t);
  return o;
}

Outcome oracle_convergence()
{
  const LocalSolver ls;
  Outcome o;
  std::vector<std::pair<std::string, double>> errors;
  auto record = [&](const std::string& name, double err) {
    for (auto& [n, e] : errors) {
      if (n == name) {
        e = std::max(e, err);
        return;
      }
    }
    errors.emplace_back(name, err);
  };
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(mix_seed(seed, 3));
    const Index d = 8;
    const Matrix A = oracle::spd(rng, d) + Matrix::Identity(d, d);
    const Vector f = rng.normal_vector(d);
    const Vector ref = A.ldlt().solve(f);
    const ConvexFn E = ConvexFn::quadratic(A, f);
    const Decomposition dec = Decomposition::blocks({3, 2, 3});
    record("psc", (psc(E, dec, ls, iters(3000, 1.0 / 3.0), Vector::Zero(d)).last().var("u") - ref).norm());
    record("ssc", (ssc(E, dec, ls, iters(1000), Vector::Zero(d)).last().var("u") - ref).norm());

    const MultiLinearProblem L = random_multilinear(seed, 6, 3, 10.0);
    record("linear PR", (pr_linear(L, iters(3000)).last().var("u") - L.solve()).norm());

    const oracle::QuadraticSplit Q = oracle::random_split(mix_seed(seed, 4), 5, 3);
    const MultiConvexProblem P = Q.problem();
    const Blocks v0(3, Vector::Zero(5));
    record("generalized DR", (generalized_dr(P, ls, iters(3000, 0.5), Q.c, v0).last().var("u") - Q.minimizer()).norm());

    const ConstrainedProblem C = random_constrained(seed, 3, 2, 2, 4.0);
    const oracle::Kkt kkt = oracle::constrained_kkt(C);
    const Blocks u0(3, Vector::Zero(2));
    const Vector l0 = Vector::Zero(2);
    record("plain ADMM", oracle::block_distance(admm_plain(C, ls, iters(4000), u0, l0).last().blocks("u"), kkt.u));
    record("symmetrized ADMM",
           oracle::block_distance(admm_symmetrized(C, ls, iters(4000), u0, l0).last().blocks("u"), kkt.u));
    SolverConfig rc = iters(4000);
    rc.seed = seed;
    record("randomly permuted ADMM",
           oracle::block_distance(admm_random_permuted(C, ls, rc, u0, l0).last().blocks("u"), kkt.u));

    const ConstrainedProblem T = random_two_block(seed, 4, 3, 5.0);
    const oracle::Kkt tk = oracle::constrained_kkt(T);
    const Trace tb = admm_two_block(T, ls, iters(3000), Vector::Zero(4), Vector::Zero(3), Vector::Zero(3));
    record("two-block ADMM", std::hypot((tb.last().var("u1") - tk.u[0]).norm(), (tb.last().var("u2") - tk.u[1]).norm()));

    const ConstrainedProblem one = random_constrained(seed, 1, 4, 2, 5.0, 2.0);
    record("ALM", (alm(one, ls, iters(500), Vector::Zero(4), Vector::Zero(2)).last().var("u") -
                   oracle::constrained_kkt(one).u[0])
                      .norm());

    const SharingProblem S = random_sharing(seed, 3, 2, 3, 4.0);
    const auto sref = oracle::sharing_solution(S);
    const oracle::SharingStart st = oracle::sharing_start(S, oracle::zero_blocks(S));
    record("dualization-based ADMM",
           oracle::block_distance(
               admm_dualization_based(S, ls, iters(4000, kDualizationTau), st.v, st.lambda).last().blocks("u_hat"), sref));
    record("parallel dualization-based ADMM",
           oracle::block_distance(
               admm_dualization_parallel(S, ls, iters(8000, 1.0 / 3.0), st.v, st.lambda).last().blocks("u"), sref));
  }
  for (const auto& [name, err] : errors) {
    if (!(err <= 1e-6)) { o.pass = false; }
    o.detail += fmt::format("{} {:.2g}; ", name, err);
  }
  o.detail += "5 seeds each";
  return o;
}

Outcome dykstra_correctness()
{
  Outcome o;
  Worst box, affine, neumann, same;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const PocsProblem B = box_halfspace(seed, 5);
    const Vector bref = oracle::project_box_halfspace(B.f, B.sets[0].lower(), B.sets[0].upper(), B.sets[1].normal(),
                                                      B.sets[1].level());
    box.see((dykstra(B, iters(3000)).last().var("u") - bref).norm());

    const PocsProblem A = random_affine_pocs(seed, 5, 2);
    const Vector aref = oracle::project_affine_intersection(A.f, *A.common_point, {A.sets[0].basis(), A.sets[1].basis()});
    const Trace d = dykstra(A, iters(5000));
    const Trace v = von_neumann(A, iters(5000));
    affine.see((d.last().var("u") - aref).norm());
    neumann.see((v.last().var("u") - aref).norm());
    for (int n = 0; n <= 5000; ++n) {
      const TraceStep& a = d.iterate(n);
      const TraceStep& b = v.iterate(n);
      same.see((a.var("u") - b.var("u")).norm());
    }
  }
  o.pass = box.value <= 1e-6 && affine.value <= 1e-6 && neumann.value <= 1e-6 && same.value <= 1e-10;
  o.detail = fmt::format("box∩halfspace {:.2g}, two affine {:.2g}, von Neumann {:.2g}, per-iterate gap {:.2g}; 10 instances each",
                         box.value, affine.value, neumann.value, same.value);
  return o;
}

Outcome classical_reductions()
{
  const LocalSolver ls;
  Worst pr, dr;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(mix_seed(seed, 5));
    const Index d = 4;
    const double tau = rng.uniform(0.3, 1.0);
    oracle::ClassicalSplitting C{oracle::spd(rng, d), oracle::spd(rng, d), rng.normal_vector(d), rng.normal_vector(d)};
    const MultiConvexProblem P{ConvexFn::squared_distance(2.0, Vector::Zero(d)),
                               {{ConvexFn::quadratic(C.A1, C.b1), LinOp::identity(d)},
                                {ConvexFn::quadratic(C.A2, C.b2), LinOp::identity(d)}}};
    const Blocks v0{rng.normal_vector(d), rng.normal_vector(d)};
    const Vector u0 = 0.5 * (v0[0] + v0[1]);

    const Trace tp = generalized_pr(P, ls, iters(50), u0, v0);
    const auto rp = C.run(2.0 * u0 - v0[0], 50);
    const Trace td = generalized_dr(P, ls, iters(50, tau), u0, v0);
    const auto rd = C.run(v0[1], 50, tau);
    for (int n = 0; n <= 50; ++n) {
      const auto k = static_cast<std::size_t>(n);
      const TraceStep& s = tp.iterate(n);
      pr.see((2.0 * s.var("u") - s.var("v", 0) - rp[k]).norm() / (1.0 + rp[k].norm()));
      dr.see((td.iterate(n).var("v", 1) - rd[k]).norm() / (1.0 + rd[k].norm()));
    }
  }
  Outcome o;
  o.pass = pr.value <= 1e-10 && dr.value <= 1e-10;
  o.detail = fmt::format("PR {:.2g}, relaxed DR {:.2g}; 10 instances x 50 iterations", pr.value, dr.value);
  return o;
}

Outcome rof()
{
  const LocalSolver ls;
  Worst gap, recovery, agree;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const RofInstance inst = random_rof(seed, 12, 1.0);
    const PrimalDualProblem P = rof_primal_dual(inst);
    const ConvexFn E = objective(dual_problem(P));
    const Decomposition split = rof_decomposition(inst, 6);
    const Vector p0 = Vector::Zero(inst.dim());
    SolverConfig sc = iters(20000), pc = iters(40000, 0.5);
    sc.stop_tol = pc.stop_tol = 1e-14;
    const Vector ps = ssc(E, split, ls, sc, p0).last().var("u");
    const Vector pp = psc(E, split, ls, pc, p0).last().var("u");
    const Vector u = rof_recover(inst, ps);
    gap.see(duality_gap(P, u, ps));
    // the recovery formula against the optimality condition αu − αf + Dᵗp = 0
    recovery.see((inst.alpha * (u - inst.f) + LinOp::forward_difference(inst.dim()).apply_adjoint(ps)).norm());
    agree.see((ps - pp).norm());
  }
  Outcome o;
  o.pass = gap.value <= 1e-6 && recovery.value <= 1e-8 && agree.value <= 1e-6;
  o.detail = fmt::format("gap {:.2g}, recovery residual {:.2g}, SSC vs PSC {:.2g}; 5 instances", gap.value,
                         recovery.value, agree.value);
  return o;
}

Outcome logistic()
{
  const LocalSolver ls;
  Worst identity, objective_err;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const LogisticInstance inst = random_logistic(seed, 50, 5, 3, 0.2);
    const MultiConvexProblem P = logistic_problem(inst);
    const DualSetup dual = convex_dual(P, logistic_dual_start(inst));
    const SplittingStart st = matched_start(P, logistic_dual_start(inst));
    const Trace primal = generalized_pr(P, ls, iters(60), st.u0, st.v0);
    const Trace ssc_run = ssc(dual.energy, dual.decomposition, ls, iters(60), dual.p0);
    for (int n = 0; n <= 60; ++n) {
      const Vector p = ssc_run.iterate(n).var("u");
      Vector s = Vector::Zero(P.dim());
      Index off = 0;
      for (const auto& t : P.terms) {
        s -= t.B.apply_adjoint(p.segment(off, t.B.rows()));
        off += t.B.rows();
      }
      identity.see((primal.iterate(n).var("u") - grad_conjugate(P.F, s)).norm());
    }
    const oracle::LogisticLoss loss{inst};
    objective_err.see(std::abs(loss.value(primal.last().var("u")) - loss.value(loss.minimize())));
  }
  Outcome o;
  o.pass = identity.value <= 1e-6 && objective_err.value <= 1e-6;
  o.detail = fmt::format("primal-dual identity {:.2g}, objective vs gradient descent {:.2g}; N = 50, d = 5, k = 3, 5 seeds",
                         identity.value, objective_err.value);
  return o;
}

Outcome uzawa_and_witness()
{
  Outcome o;
  double sym_primal = INFINITY, sym_dual = INFINITY, rnd_primal = INFINITY, rnd_dual = INFINITY;
  int plain_nonsymmetric = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ConstrainedProblem P = random_constrained(seed, 3, 2, 3, 10.0);
    const QuadraticSaddle S = assemble_saddle(P);
    const UzawaReport plain = uzawa_check_quadratic(P, plain_smoother(S, P.beta));
    plain_nonsymmetric += plain.symmetric ? 0 : 1;
    const UzawaReport sym = uzawa_check_quadratic(P, symmetrized_smoother(S, P.beta));
    sym_primal = std::min(sym_primal, sym.min_eig_primal);
    sym_dual = std::min(sym_dual, sym.min_eig_dual);
    const UzawaReport rnd = uzawa_check_quadratic(P, random_smoother(S, P.beta));
    rnd_primal = std::min(rnd_primal, rnd.min_eig_primal);
    rnd_dual = std::min(rnd_dual, rnd.min_eig_dual);
  }
  const LocalSolver ls;
  const Trace plain = admm_plain(chyy_witness(), ls, iters(5000), Blocks(3, Vector::Ones(1)), Vector::Zero(3));
  const double blowup = plain.last().metrics.at("constraint");
  const SharingProblem sh = chyy_sharing();
  const oracle::SharingStart st = oracle::sharing_start(sh, Blocks(3, Vector::Ones(1)));
  SolverConfig cfg = iters(20000, kDualizationTau);
  cfg.stop_tol = 1e-12;
  const Trace dual = admm_dualization_based(sh, ls, cfg, st.v, st.lambda);
  const double dual_err = oracle::block_distance(dual.last().blocks("u_hat"), oracle::sharing_solution(sh));

  const bool symmetrized_ok = sym_primal >= -1e-10 && sym_dual >= -1e-10;
  const bool random_ok = rnd_primal >= -1e-10 && rnd_dual >= -1e-10;
  const bool witness_ok = plain.status == Status::diverged && blowup > 1e6 && dual.status == Status::converged && dual_err <= 1e-6;
  o.pass = symmetrized_ok && random_ok && plain_nonsymmetric == 10 && witness_ok;
  o.detail = fmt::format(
      "symmetrized min eig {:.2g}/{:.2g}, averaged random {:.2g}/{:.2g}, plain nonsymmetric {}/10; "
      "CHYY plain residual {:.3g} at iteration {}, dualization-based {} after {} iterations (error {:.2g})",
      sym_primal, sym_dual, rnd_primal, rnd_dual, plain_nonsymmetric, blowup, plain.iterations(),
      to_string(dual.status), dual.iterations(), dual_err);
  if (!o.pass && symmetrized_ok && !random_ok && plain_nonsymmetric == 10 && witness_ok) {
    o.expected_failure = "the averaged permuted Gauss-Seidel smoother violates the primal condition on coupled blocks";
  }
  return o;
}

Outcome error_transfer()
{
  Outcome o;
  double least = INFINITY;
  int checked = 0;
  for (const auto& p : pair_registry()) {
    if (!p.error_transfer) { continue; }
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const PairRun run = run_pair(p.id, seed, 30);
      const TransferReport rep = check_error_transfer(run, 400);
      least = std::min(least, rep.min_slack);
      ++checked;
      if (!rep.pass) {
        o.pass = false;
        o.detail += fmt::format("{} seed {}: {:.3g}; ", p.id, seed, rep.min_slack);
      }
    }
  }
  o.pass = o.pass && least >= -1e-9;
  o.detail += fmt::format("{} paired runs, min slack {:.3g}", checked, least);
  return o;
}

// CLI runs of the parallel variants at several thread counts, each repeated in a fresh process.
Outcome determinism()
{
  const fs::path dir = fs::temp_directory_path() / ("dualkit_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::vector<std::string> configs = {
      R"({"problem": {"id": "random_pocs", "dim": 6, "sets": 4}, "algorithm": "parallel_dykstra", "solver": {"max_iters": 40, "seed": 3}})",
      R"({"problem": {"id": "random_pocs", "dim": 6, "sets": 4}, "algorithm": "parallel_von_neumann", "solver": {"max_iters": 40, "seed": 4}})",
      R"({"problem": {"id": "random_multilinear", "dim": 6, "blocks": 3}, "algorithm": "psc", "solver": {"max_iters": 30, "seed": 2}})",
      R"({"problem": {"id": "random_multilinear", "dim": 6, "blocks": 3}, "algorithm": "block_jacobi", "solver": {"max_iters": 30, "seed": 2}})",
      R"({"problem": {"id": "random_splitting", "dim": 5, "blocks": 4}, "algorithm": "parallel_dr", "solver": {"max_iters": 30, "seed": 5}})",
      R"({"problem": {"id": "random_sharing", "blocks": 3}, "algorithm": "admm_dualization_parallel", "solver": {"max_iters": 30, "seed": 6}})",
      R"({"problem": {"id": "random_constrained", "blocks": 3}, "algorithm": "admm_random_permuted", "solver": {"max_iters": 30, "seed": 9}})",
      R"({"problem": {"id": "rof", "dim": 16}, "algorithm": "ssc", "solver": {"max_iters": 30, "seed": 7, "permutation": "random_each_sweep"}})",
  };
  const std::regex time_field("\"time_s\":[^,}]*,?");
  Outcome o;
  int compared = 0;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    const fs::path cfg = dir / fmt::format("c{}.json", c);
    std::ofstream(cfg) << configs[c];
    std::string reference;
    for (int threads : {1, 2, 4, 8, 4}) {
      const fs::path out = dir / fmt::format("c{}_{}.jsonl", c, compared);
      const std::string cmd = fmt::format("DUALKIT_THREADS={} '{}' run --config '{}' --out '{}' 2>/dev/null", threads,
                                          DUALKIT_CLI_PATH, cfg.string(), out.string());
      const int status = std::system(cmd.c_str());
      std::ifstream in(out);
      std::stringstream ss;
      ss << in.rdbuf();
      const std::string trace = std::regex_replace(ss.str(), time_field, "");
      ++compared;
      if (!WIFEXITED(status) || WEXITSTATUS(status) == 4 || trace.empty()) {
        o.pass = false;
        o.detail += fmt::format("config {} did not run; ", c);
        break;
      }
      if (reference.empty()) {
        reference = trace;
      } else if (trace != reference) {
        o.pass = false;
        o.detail += fmt::format("config {} differs at {} threads; ", c, threads);
      }
    }
  }
  fs::remove_all(dir);
  o.detail += fmt::format("{} configs x thread counts 1, 2, 4, 8, 4; {} invocations", configs.size(), compared);
  return o;
}

} // namespace

int main()
{
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"convex calculus identities on seeded samples", convex_suite},
      {"paired runs certify every dualization pair", pair_certification},
      {"solvers converge to direct KKT/SPD solutions", oracle_convergence},
      {"Dykstra limits match analytic projections", dykstra_correctness},
      {"two-term PR/DR reproduce the classical recursions", classical_reductions},
      {"1-D ROF duality gap, recovery and split agreement", rof},
      {"logistic regression primal-dual identity and optimum", logistic},
      {"Uzawa smoother conditions and the CHYY divergence witness", uzawa_and_witness},
      {"error-transfer bound dominates the primal error", error_transfer},
      {"traces are identical across processes and thread counts", determinism},
  };
  int unexpected = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    const Clock clock;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    o.detail += fmt::format(" [{:.1f} s]", clock.seconds());
    if (o.pass) {
      fmt::print("PASS  {}  ({})\n", name, o.detail);
    } else if (!o.expected_failure.empty()) {
      fmt::print("FAIL  {}  ({}) [expected: {}]\n", name, o.detail, o.expected_failure);
    } else {
      fmt::print("FAIL  {}  ({})\n", name, o.detail);
      ++unexpected;
    }
    std::fflush(stdout);
  }
  return unexpected == 0 ? 0 : 1;
}
