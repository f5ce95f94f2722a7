#include "dualkit/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "dualkit/admm.hpp"
#include "dualkit/correction.hpp"
#include "dualkit/pairings.hpp"
#include "dualkit/parallel.hpp"
#include "dualkit/problems.hpp"
#include "dualkit/projsplit.hpp"
#include "dualkit/rng.hpp"

namespace dualkit::cli {

using nlohmann::json;

namespace {

const std::vector<RegistryEntry> kProblems = {
    {"two_lines", "two lines in the plane through (1, 1), projected from (3, 2)", "alternating projections"},
    {"box_halfspace", "box [-1, 1]^d cut by a halfspace (params: seed, dim)", "Dykstra's algorithm"},
    {"random_pocs", "boxes and halfspaces with a common point (params: seed, dim, sets)", "Dykstra's algorithm"},
    {"random_affine_pocs", "affine subspaces with a common point (params: seed, dim, sets)",
     "alternating projections"},
    {"linear_system", "consistent square system Au = f (params: seed, dim)", "Kaczmarz method"},
    {"random_multilinear", "sum of SPD quadratics plus (alpha/2)|u|^2 (params: seed, dim, blocks, cond, alpha)",
     "linear Peaceman-Rachford splitting"},
    {"random_splitting", "F(u) + sum_j G_j(B_j u) with quadratic terms (params: seed, dim, blocks, alpha)",
     "Fenchel-Rockafellar duality"},
    {"random_constrained", "sum_j F_j(u_j) s.t. sum_j B_j u_j = g (params: seed, blocks, block_dim, constraints, cond, beta)",
     "multi-block ADMM"},
    {"random_sharing", "sum_j F_j(w_j) + (beta/2)|sum_j B_j w_j - g|^2 (params: seed, blocks, block_dim, constraints, cond, beta)",
     "dualization-based ADMM"},
    {"random_two_block", "F_1(u_1) + F_2(u_2) s.t. B_1 u_1 - u_2 = g (params: seed, d1, constraints, cond, beta)",
     "two-block ADMM"},
    {"rof", "1-D total-variation denoising (params: seed, dim, alpha, split, f)", "ROF model"},
    {"logistic", "multinomial logistic regression (params: path, header, classes, alpha; default bundled XOR)",
     "logistic regression"},
    {"chyy", "three-block zero-objective example where plain ADMM diverges (params: start, default 1)",
     "ADMM divergence example"},
    {"instance", "serialized problem instance (params: path, split)", "any"},
};

const std::vector<RegistryEntry> kAlgorithms = {
    {"von_neumann", "alternating projections", "von Neumann's method"},
    {"kaczmarz", "row-action projections for Au = f", "Kaczmarz method"},
    {"dykstra", "Dykstra's projection algorithm", "Dykstra's algorithm"},
    {"parallel_von_neumann", "averaged projections", "parallel projection method"},
    {"parallel_dykstra", "parallel Dykstra", "parallel Dykstra's algorithm"},
    {"psc", "parallel subspace correction", "PSC"},
    {"ssc", "successive subspace correction", "SSC"},
    {"relaxed_ssc", "SSC sweep followed by relaxation", "relaxed SSC"},
    {"block_jacobi", "relaxed block Jacobi on the expanded problem", "block Jacobi"},
    {"block_gauss_seidel", "block Gauss-Seidel on the expanded problem", "block Gauss-Seidel"},
    {"pr_linear", "multi-operator linear Peaceman-Rachford", "linear PR splitting"},
    {"generalized_pr", "generalized Peaceman-Rachford splitting", "generalized PR"},
    {"generalized_dr", "generalized Douglas-Rachford splitting", "generalized DR"},
    {"parallel_dr", "parallel Douglas-Rachford splitting", "parallel DR"},
    {"admm_plain", "Gauss-Seidel multi-block ADMM", "multi-block ADMM"},
    {"admm_symmetrized", "forward-backward sweep ADMM", "symmetrized ADMM"},
    {"admm_random_permuted", "ADMM with a random sweep order per iteration", "randomly permuted ADMM"},
    {"admm_two_block", "two-block ADMM with B_2 = -I", "two-block ADMM"},
    {"alm", "augmented Lagrangian method", "method of multipliers"},
    {"admm_dualization_based", "ADMM from generalized DR on the sharing dual", "dualization-based ADMM"},
    {"admm_dualization_parallel", "ADMM from parallel DR on the sharing dual", "parallel dualization-based ADMM"},
    {"proximal_point", "proximal point method on the ALM dual", "proximal point method"},
};

constexpr const char* kBundledXor = "0,0,1\n1,1,1\n0,1,2\n1,0,2\n";

// Reads the fields of one JSON object and rejects anything left unread.
class Fields {
public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path))
  {
    if (!j_.is_object()) { throw UsageError(where() + " must be an object"); }
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key, double fallback)
  {
    if (!take(key)) { return fallback; }
    const json& v = j_.at(key);
    if (!v.is_number()) { throw UsageError(field(key) + ": expected a number"); }
    return v.get<double>();
  }

  std::optional<double> optional_number(const std::string& key)
  {
    if (!has(key)) {
      take(key);
      return std::nullopt;
    }
    return number(key, 0.0);
  }

  long long integer(const std::string& key, long long fallback, long long lo, long long hi)
  {
    if (!take(key)) { return fallback; }
    const json& v = j_.at(key);
    if (!v.is_number_integer()) { throw UsageError(field(key) + ": expected an integer"); }
    const long long x = v.get<long long>();
    if (x < lo || x > hi) {
      throw UsageError(field(key) + ": " + std::to_string(x) + " is outside [" + std::to_string(lo) + ", " +
                       std::to_string(hi) + "]");
    }
    return x;
  }

  std::uint64_t seed(const std::string& key, std::uint64_t fallback)
  {
    if (!take(key)) { return fallback; }
    const json& v = j_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      throw UsageError(field(key) + ": expected a nonnegative integer");
    }
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback)
  {
    if (!take(key)) { return fallback; }
    const json& v = j_.at(key);
    if (!v.is_boolean()) { throw UsageError(field(key) + ": expected true or false"); }
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback)
  {
    if (!take(key)) { return fallback; }
    const json& v = j_.at(key);
    if (!v.is_string()) { throw UsageError(field(key) + ": expected a string"); }
    return v.get<std::string>();
  }

  std::string required_string(const std::string& key)
  {
    if (!has(key)) { throw UsageError(field(key) + ": missing"); }
    return string(key, "");
  }

  const json* raw(const std::string& key)
  {
    return take(key) ? &j_.at(key) : nullptr;
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const
  {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (seen_.count(it.key()) == 0) { throw UsageError(field(it.key()) + ": unknown key"); }
    }
  }

private:
  bool take(const std::string& key)
  {
    seen_.insert(key);
    return j_.contains(key);
  }
  std::string where() const { return path_.empty() ? "config" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string read_file(const std::string& path, const char* what)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) { throw UsageError(std::string("cannot open ") + what + " '" + path + "'"); }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// line:column of a byte offset
std::string position(const std::string& text, std::size_t byte)
{
  byte = std::min(byte, text.size());
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return std::to_string(line) + ":" + std::to_string(col);
}

bool known(const std::vector<RegistryEntry>& reg, const std::string& id)
{
  return std::any_of(reg.begin(), reg.end(), [&](const RegistryEntry& e) { return e.id == id; });
}

// Every shape an algorithm may consume; a problem fills the ones it supports.
struct Forms {
  std::optional<PocsProblem> pocs;
  std::optional<std::pair<Matrix, Vector>> system;
  std::optional<MultiLinearProblem> linear;
  std::optional<DualSetup> energy;
  std::optional<MultiConvexProblem> splitting;
  Blocks splitting_p0;
  std::optional<ConstrainedProblem> constrained;
  std::optional<SharingProblem> sharing;
  // every entry of the ADMM primal start
  double primal_start = 0.0;
};

Blocks zero_duals(const MultiConvexProblem& P)
{
  Blocks p;
  for (const auto& t : P.terms) { p.push_back(Vector::Zero(t.B.rows())); }
  return p;
}

void add_splitting(Forms& f, MultiConvexProblem P, Blocks p0)
{
  f.energy = convex_dual(P, p0);
  f.splitting_p0 = std::move(p0);
  f.splitting = std::move(P);
}

void add_rof(Forms& f, const RofInstance& inst, Index split)
{
  if (split < 1 || split >= inst.dim()) {
    throw UsageError("problem.split: must lie in [1, " + std::to_string(inst.dim() - 1) + "]");
  }
  const PrimalDualProblem dual = dual_problem(rof_primal_dual(inst));
  f.energy = DualSetup{objective(dual), rof_decomposition(inst, split), Vector::Zero(inst.dim())};
  MultiConvexProblem S = rof_splitting(inst, split);
  f.splitting_p0 = zero_duals(S);
  f.splitting = std::move(S);
}

void add_logistic(Forms& f, const LogisticInstance& inst)
{
  add_splitting(f, logistic_problem(inst), logistic_dual_start(inst));
}

void add_sharing(Forms& f, SharingProblem P)
{
  const SharingEnergy E = sharing_energy(P);
  f.energy = DualSetup{E.energy, E.decomposition, Vector::Zero(E.energy.dim())};
  MultiConvexProblem D = sharing_dual(P);
  f.splitting_p0 = zero_duals(D);
  f.splitting = std::move(D);
  f.sharing = std::move(P);
}

Forms load_problem(const RunConfig& cfg)
{
  Forms f;
  Fields p(cfg.problem_params, "problem");
  p.string("id", "");
  const std::uint64_t seed = p.seed("seed", cfg.solver.seed);
  const std::string& id = cfg.problem;
  auto beta = [&](double b) { return cfg.beta ? *cfg.beta : b; };
  if (id == "two_lines") {
    f.pocs = two_lines();
  } else if (id == "box_halfspace") {
    f.pocs = box_halfspace(seed, p.integer("dim", 3, 1, 1000));
  } else if (id == "random_pocs" || id == "random_affine_pocs") {
    const Index dim = p.integer("dim", 4, id == "random_pocs" ? 1 : 2, 1000);
    const int sets = static_cast<int>(p.integer("sets", 3, 1, 100));
    f.pocs = id == "random_pocs" ? random_pocs(seed, dim, sets) : random_affine_pocs(seed, dim, sets);
  } else if (id == "linear_system") {
    const Index dim = p.integer("dim", 4, 1, 1000);
    Rng rng(mix_seed(seed, 0x6b61637aULL));
    Matrix A = rng.normal_matrix(dim, dim);
    const Vector x = rng.normal_vector(dim);
    Vector rhs = A * x;
    f.system = std::make_pair(std::move(A), std::move(rhs));
  } else if (id == "random_multilinear") {
    const Index dim = p.integer("dim", 6, 1, 1000);
    const int J = static_cast<int>(p.integer("blocks", 3, 1, 100));
    const double cond = p.number("cond", 10.0);
    f.linear = random_multilinear(seed, dim, J, cond, p.number("alpha", 1.0));
    f.energy = linear_dual(*f.linear);
  } else if (id == "random_splitting") {
    const Index dim = p.integer("dim", 6, 1, 1000);
    const int J = static_cast<int>(p.integer("blocks", 3, 1, 100));
    MultiConvexProblem P = random_multiconvex(seed, dim, J, p.number("alpha", 1.0));
    Blocks p0 = zero_duals(P);
    add_splitting(f, std::move(P), std::move(p0));
  } else if (id == "random_constrained" || id == "random_sharing") {
    const int J = static_cast<int>(p.integer("blocks", 3, 1, 100));
    const Index m = p.integer("block_dim", 2, 1, 1000);
    const Index w = p.integer("constraints", 2, 1, 1000);
    const double cond = p.number("cond", 10.0);
    const double b = beta(p.number("beta", 1.0));
    if (id == "random_constrained") {
      f.constrained = random_constrained(seed, J, m, w, cond, b);
    } else {
      add_sharing(f, random_sharing(seed, J, m, w, cond, b));
    }
  } else if (id == "random_two_block") {
    const Index d1 = p.integer("d1", 3, 1, 1000);
    const Index w = p.integer("constraints", 3, 1, 1000);
    const double cond = p.number("cond", 10.0);
    f.constrained = random_two_block(seed, d1, w, cond, beta(p.number("beta", 1.0)));
  } else if (id == "rof") {
    RofInstance inst;
    if (const json* fj = p.raw("f")) {
      inst.f = vector_from_json(*fj, "problem.f");
      inst.alpha = p.number("alpha", 1.0);
      p.integer("dim", 0, 0, 0);
    } else {
      const Index dim = p.integer("dim", 16, 2, 100000);
      inst = random_rof(seed, dim, p.number("alpha", 1.0));
    }
    inst.validate();
    add_rof(f, inst, p.integer("split", inst.dim() / 2, 1, 100000));
  } else if (id == "logistic") {
    const std::string path = p.string("path", "");
    const bool header = p.boolean("header", false);
    const int k = static_cast<int>(p.integer("classes", 0, 0, 1000));
    const double alpha = p.number("alpha", 1.0);
    add_logistic(f, path.empty() ? parse_logistic_csv(kBundledXor, alpha, false, k, "bundled xor")
                                 : parse_logistic_csv(read_file(path, "data file"), alpha, header, k, path));
  } else if (id == "chyy") {
    ConstrainedProblem C = chyy_witness();
    SharingProblem S = chyy_sharing();
    if (cfg.beta) {
      C.beta = *cfg.beta;
      S.beta = *cfg.beta;
    }
    f.constrained = std::move(C);
    add_sharing(f, std::move(S));
    f.primal_start = p.number("start", 1.0);
  } else if (id == "instance") {
    const std::string path = p.required_string("path");
    const std::string text = read_file(path, "instance file");
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw UsageError(path + ":" + position(text, e.byte) + ": " + e.what());
    }
    const std::string type = j.value("type", "");
    try {
      if (type == "pocs") {
        f.pocs = pocs_from_json(j);
      } else if (type == "multilinear") {
        f.linear = multilinear_from_json(j);
        f.energy = linear_dual(*f.linear);
      } else if (type == "rof") {
        const RofInstance inst = rof_from_json(j);
        add_rof(f, inst, p.integer("split", inst.dim() / 2, 1, 100000));
      } else if (type == "logistic") {
        add_logistic(f, logistic_from_json(j));
      } else if (type == "constrained") {
        f.constrained = constrained_from_json(j);
        if (cfg.beta) { f.constrained->beta = *cfg.beta; }
      } else {
        throw UsageError(path + ": unknown instance type '" + type + "'");
      }
    } catch (const json::exception& e) {
      throw UsageError(path + ": " + e.what());
    }
  } else {
    throw UsageError("problem.id: unknown problem '" + id + "'");
  }
  p.finish();
  return f;
}

template <class T>
const T& need(const std::optional<T>& form, const RunConfig& cfg, const char* shape)
{
  if (!form) {
    throw UsageError("algorithm '" + cfg.algorithm + "' needs " + shape + "; problem '" + cfg.problem +
                     "' does not provide one");
  }
  return *form;
}

bool is_one_over_J(const std::string& a)
{
  return a == "psc" || a == "parallel_von_neumann" || a == "parallel_dykstra" || a == "parallel_dr" ||
         a == "block_jacobi" || a == "admm_dualization_parallel";
}

} // namespace

const std::vector<RegistryEntry>& problem_registry() { return kProblems; }
const std::vector<RegistryEntry>& algorithm_registry() { return kAlgorithms; }

RunConfig parse_run_config(const json& j)
{
  RunConfig cfg;
  Fields top(j, "");
  const json* problem = top.raw("problem");
  if (!problem) { throw UsageError("problem: missing"); }
  if (problem->is_string()) {
    cfg.problem = problem->get<std::string>();
  } else if (problem->is_object()) {
    if (!problem->contains("id") || !problem->at("id").is_string()) { throw UsageError("problem.id: missing"); }
    cfg.problem = problem->at("id").get<std::string>();
    cfg.problem_params = *problem;
  } else {
    throw UsageError("problem: expected an id or an object");
  }
  if (!known(kProblems, cfg.problem)) { throw UsageError("problem.id: unknown problem '" + cfg.problem + "'"); }
  cfg.algorithm = top.required_string("algorithm");
  if (!known(kAlgorithms, cfg.algorithm)) {
    throw UsageError("algorithm: unknown algorithm '" + cfg.algorithm + "'");
  }
  cfg.output = top.string("output", "");
  cfg.solver.max_iters = 1000;
  cfg.solver.stop_tol = 1e-10;
  if (const json* s = top.raw("solver")) {
    Fields f(*s, "solver");
    cfg.tau = f.optional_number("tau");
    cfg.beta = f.optional_number("beta");
    cfg.solver.max_iters = static_cast<int>(f.integer("max_iters", cfg.solver.max_iters, 0, 100000000));
    cfg.solver.stop_tol = f.number("tolerance", cfg.solver.stop_tol);
    cfg.solver.seed = f.seed("seed", 0);
    const std::string perm = f.string("permutation", "fixed");
    if (perm == "fixed") {
      cfg.solver.permutation = PermutationMode::fixed;
    } else if (perm == "random_each_sweep") {
      cfg.solver.permutation = PermutationMode::random_each_sweep;
    } else {
      throw UsageError("solver.permutation: expected \"fixed\" or \"random_each_sweep\"");
    }
    cfg.solver.allow_large_step = f.boolean("allow_large_step", false);
    cfg.solver.record_fractional = f.boolean("record_fractional", true);
    try {
      cfg.local_solver = local_solver_kind_from_string(f.string("local_solver", "automatic"));
    } catch (const Error& e) {
      throw UsageError(std::string("solver.local_solver: ") + e.what());
    }
    cfg.divergence.limit = f.number("divergence_limit", cfg.divergence.limit);
    cfg.divergence.window = static_cast<int>(f.integer("divergence_window", cfg.divergence.window, 0, 100000000));
    f.finish();
  }
  top.finish();
  if (cfg.tau && !(*cfg.tau >= 0.0)) { throw UsageError("solver.tau: must be nonnegative"); }
  if (cfg.beta && !(*cfg.beta > 0.0)) { throw UsageError("solver.beta: must be positive"); }
  if (!(cfg.solver.stop_tol >= 0.0)) { throw UsageError("solver.tolerance: must be nonnegative"); }
  return cfg;
}

RunConfig parse_run_config_text(const std::string& text, const std::string& source)
{
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw UsageError(source + ":" + position(text, e.byte) + ": invalid JSON: " + e.what());
  }
  return parse_run_config(j);
}

Trace execute(const RunConfig& cfg)
{
  const Forms f = load_problem(cfg);
  SolverConfig sc = cfg.solver;
  sc.threads = resolve_threads(0);
  const LocalSolver ls(cfg.local_solver);
  const std::string& a = cfg.algorithm;
  const DivergenceRule& rule = cfg.divergence;

  int J = 1;
  if (f.pocs) { J = static_cast<int>(f.pocs->sets.size()); }
  if (f.energy) { J = f.energy->decomposition.size(); }
  if (f.splitting) { J = f.splitting->size(); }
  if (f.sharing) { J = f.sharing->size(); }
  if (f.constrained) { J = f.constrained->size(); }
  sc.tau = cfg.tau ? *cfg.tau : is_one_over_J(a) ? 1.0 / J : a == "admm_dualization_based" ? kDualizationTau : 1.0;

  if (a == "von_neumann") { return von_neumann(need(f.pocs, cfg, "a projection problem"), sc); }
  if (a == "dykstra") { return dykstra(need(f.pocs, cfg, "a projection problem"), sc); }
  if (a == "parallel_von_neumann") { return parallel_von_neumann(need(f.pocs, cfg, "a projection problem"), sc); }
  if (a == "parallel_dykstra") { return parallel_dykstra(need(f.pocs, cfg, "a projection problem"), sc); }
  if (a == "kaczmarz") {
    const auto& s = need(f.system, cfg, "a linear system");
    return kaczmarz(s.first, s.second, sc);
  }
  if (a == "psc" || a == "ssc" || a == "relaxed_ssc" || a == "block_jacobi" || a == "block_gauss_seidel") {
    std::optional<DualSetup> energy = f.energy;
    if (!energy && f.pocs) { energy = dykstra_dual(*f.pocs); }
    const DualSetup& E = need(energy, cfg, "an energy with a space decomposition");
    if (a == "psc") { return psc(E.energy, E.decomposition, ls, sc, E.p0); }
    if (a == "ssc") { return ssc(E.energy, E.decomposition, ls, sc, E.p0); }
    if (a == "relaxed_ssc") { return relaxed_ssc(E.energy, E.decomposition, ls, sc, E.p0); }
    const ExpandedProblem ex = expand_problem(E.energy, E.decomposition);
    if (ex.sum.cols() != E.p0.size()) {
      throw UsageError("algorithm '" + a + "' needs a decomposition into coordinate blocks");
    }
    if (a == "block_jacobi") { return block_jacobi(ex.energy, ex.blocks, ls, sc, E.p0); }
    return block_gauss_seidel(ex.energy, ex.blocks, ls, sc, E.p0);
  }
  if (a == "pr_linear") { return pr_linear(need(f.linear, cfg, "a multi-linear problem"), sc); }
  if (a == "generalized_pr" || a == "generalized_dr" || a == "parallel_dr") {
    const MultiConvexProblem& P = need(f.splitting, cfg, "a splitting problem");
    const SplittingStart start = matched_start(P, f.splitting_p0);
    if (a == "generalized_pr") { return generalized_pr(P, ls, sc, start.u0, start.v0); }
    if (a == "generalized_dr") { return generalized_dr(P, ls, sc, start.u0, start.v0); }
    return parallel_dr(P, ls, sc, start.u0, start.v0);
  }
  if (a == "admm_plain" || a == "admm_symmetrized" || a == "admm_random_permuted" || a == "alm" ||
      a == "admm_two_block" || a == "proximal_point") {
    const ConstrainedProblem& P = need(f.constrained, cfg, "a constrained problem");
    const Vector lambda0 = Vector::Zero(P.g.size());
    Blocks u0;
    for (int j = 0; j < P.size(); ++j) { u0.push_back(Vector::Constant(P.block_dim(j), f.primal_start)); }
    if (a == "admm_plain") { return admm_plain(P, ls, sc, u0, lambda0, rule); }
    if (a == "admm_symmetrized") { return admm_symmetrized(P, ls, sc, u0, lambda0, rule); }
    if (a == "admm_random_permuted") { return admm_random_permuted(P, ls, sc, u0, lambda0, rule); }
    if (a == "admm_two_block") {
      if (P.size() != 2) { throw UsageError("admm_two_block needs a problem with two blocks"); }
      return admm_two_block(P, ls, sc, u0[0], u0[1], lambda0, rule);
    }
    if (P.size() != 1) { throw UsageError("algorithm '" + a + "' needs a one-block constrained problem"); }
    if (a == "alm") { return alm(P, ls, sc, u0[0], lambda0, rule); }
    return proximal_point(alm_dual_energy(P), P.beta, ls, sc, lambda0);
  }
  const SharingProblem& P = need(f.sharing, cfg, "a sharing problem");
  // v_j = B_j w_j and λ = β(Σv − g) at the constant start w
  Blocks v0;
  Vector lambda0 = -P.g;
  for (const auto& t : P.terms) {
    v0.push_back(t.B.apply(Vector::Constant(t.F.dim(), f.primal_start)));
    lambda0 += v0.back();
  }
  lambda0 *= P.beta;
  if (a == "admm_dualization_based") { return admm_dualization_based(P, ls, sc, v0, lambda0, rule); }
  return admm_dualization_parallel(P, ls, sc, v0, lambda0, rule);
}

int exit_code(Status s)
{
  switch (s) {
  case Status::converged: return exit_converged;
  case Status::diverged: return exit_diverged;
  case Status::max_iters: return exit_max_iters;
  }
  return exit_max_iters;
}

namespace {

void check_threads_env()
{
  const char* env = std::getenv("DUALKIT_THREADS");
  if (!env || *env == '\0') { return; }
  int value = 0;
  auto [ptr, ec] = std::from_chars(env, env + std::strlen(env), value);
  if (ec != std::errc() || ptr != env + std::strlen(env) || value < 1) {
    throw UsageError(std::string("DUALKIT_THREADS must be a positive integer, got '") + env + "'");
  }
}

void emit(const std::string& text, const std::string& path, std::ostream& out)
{
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) { throw UsageError("cannot write '" + path + "'"); }
  file << text;
}

} // namespace

int cmd_run(const std::string& config_path, const std::string& out_path, std::ostream& out, std::ostream& err)
{
  try {
    check_threads_env();
    const RunConfig cfg = parse_run_config_text(read_file(config_path, "config"), config_path);
    const Trace trace = execute(cfg);
    emit(to_jsonl(trace), out_path.empty() ? cfg.output : out_path, out);
    for (const auto& w : trace.warnings) { err << "warning: " << w << "\n"; }
    err << cfg.algorithm << " on " << cfg.problem << ": " << to_string(trace.status) << " after "
        << trace.iterations() << " iterations\n";
    return exit_code(trace.status);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  }
}

int cmd_verify(const std::string& pair, std::uint64_t seed, int iters, double tol, const std::string& out_path,
               std::ostream& out, std::ostream& err)
{
  try {
    check_threads_env();
    find_pair(pair);
    if (iters < 1) { throw UsageError("--iters must be at least 1"); }
    if (!(tol >= 0.0)) { throw UsageError("--tol must be nonnegative"); }
    const DualizationReport rep = verify_pair(pair, seed, iters, tol, resolve_threads(0));
    json j = rep.to_json();
    j["pair"] = pair;
    j["seed"] = seed;
    emit(j.dump(2) + "\n", out_path, out);
    err << pair << ": max residual " << rep.max_residual << (rep.pass ? " <= " : " > ") << tol << "\n";
    return rep.pass ? exit_converged : exit_verify_failed;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  }
}

int cmd_list(std::ostream& out)
{
  auto section = [&](const char* title, const std::vector<RegistryEntry>& reg) {
    out << title << ":\n";
    for (const auto& e : reg) { out << "  " << e.id << "  " << e.description << "  [" << e.reference << "]\n"; }
  };
  section("problems", kProblems);
  section("algorithms", kAlgorithms);
  out << "pairs:\n";
  for (const auto& p : pair_registry()) { out << "  " << p.id << "  " << p.description << "  [" << p.theorem << "]\n"; }
  return exit_converged;
}

int main(int argc, char** argv, std::ostream& out, std::ostream& err)
{
  CLI::App app{"dualkit: dualization of iterative convex solvers"};
  app.require_subcommand(1);
  std::string config, run_out, pair, verify_out;
  std::uint64_t seed = 0;
  int iters = 0;
  double tol = 0.0;
  auto* run = app.add_subcommand("run", "run an algorithm on a problem from a JSON config");
  run->add_option("--config", config, "config file")->required();
  run->add_option("--out", run_out, "trace file (JSON lines); overrides the config output");
  auto* verify = app.add_subcommand("verify", "run a primal/dual pair and check its relations");
  verify->add_option("--pair", pair, "pair id")->required();
  verify->add_option("--seed", seed, "instance seed")->required();
  verify->add_option("--iters", iters, "iterations")->required();
  verify->add_option("--tol", tol, "relation tolerance")->required();
  verify->add_option("--out", verify_out, "report file");
  auto* list = app.add_subcommand("list", "list problems, algorithms and pairs");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? exit_converged : exit_usage;
  }
  if (run->parsed()) { return cmd_run(config, run_out, out, err); }
  if (verify->parsed()) { return cmd_verify(pair, seed, iters, tol, verify_out, out, err); }
  if (list->parsed()) { return cmd_list(out); }
  return exit_usage;
}

} // namespace dualkit::cli
