#include "dualkit/trace.hpp"

#include <cmath>
#include <fstream>

namespace dualkit {

const Blocks& TraceStep::blocks(const std::string& name) const
{
  auto it = vars.find(name);
  if (it == vars.end()) {
    throw Error("trace step " + std::to_string(iter) + "." + std::to_string(sub) + " has no variable '" + name +
                "'");
  }
  return it->second;
}

const Vector& TraceStep::var(const std::string& name, std::size_t block) const
{
  const Blocks& b = blocks(name);
  if (block >= b.size()) {
    throw Error("trace variable '" + name + "' has " + std::to_string(b.size()) + " blocks, asked for block " +
                std::to_string(block));
  }
  return b[block];
}

Vector TraceStep::stacked(const std::string& name) const
{
  const Blocks& b = blocks(name);
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

std::string to_string(Status s)
{
  switch (s) {
  case Status::converged: return "converged";
  case Status::max_iters: return "max_iters";
  case Status::diverged: return "diverged";
  }
  return "max_iters";
}

std::vector<const TraceStep*> Trace::iterates() const
{
  std::vector<const TraceStep*> out;
  for (const auto& s : steps) {
    if (s.sub == 0) { out.push_back(&s); }
  }
  return out;
}

const TraceStep& Trace::iterate(int n) const
{
  for (const auto& s : steps) {
    if (s.sub == 0 && s.iter == n) { return s; }
  }
  throw Error(algorithm + " trace has no iterate " + std::to_string(n));
}

const TraceStep& Trace::last() const
{
  for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
    if (it->sub == 0) { return *it; }
  }
  throw Error(algorithm + " trace is empty");
}

int Trace::iterations() const { return steps.empty() ? 0 : last().iter; }

void validate(const SolverConfig& cfg)
{
  if (!(cfg.tau >= 0.0) || !std::isfinite(cfg.tau)) { throw Error("solver config: tau must be nonnegative"); }
  if (cfg.max_iters < 0) { throw Error("solver config: max_iters must be nonnegative"); }
  if (!(cfg.stop_tol >= 0.0)) { throw Error("solver config: stop_tol must be nonnegative"); }
}

bool stop_rule(const SolverConfig& cfg, const Vector& prev, const Vector& next)
{
  return cfg.stop_tol > 0.0 && (next - prev).norm() <= cfg.stop_tol * (1.0 + prev.norm());
}

nlohmann::json to_json(const Vector& v)
{
  nlohmann::json a = nlohmann::json::array();
  for (Index i = 0; i < v.size(); ++i) { a.push_back(v(i)); }
  return a;
}

nlohmann::json to_json(const TraceStep& step, bool include_time)
{
  nlohmann::json j;
  j["iter"] = step.iter;
  j["sub"] = step.sub;
  if (include_time) { j["time_s"] = step.time_s; }
  auto obj = step.metrics.find("objective");
  if (obj != step.metrics.end()) { j["objective"] = obj->second; }
  nlohmann::json res = nlohmann::json::object();
  for (const auto& [k, v] : step.metrics) {
    if (k != "objective") { res[k] = v; }
  }
  j["residuals"] = res;
  nlohmann::json vars = nlohmann::json::object();
  for (const auto& [k, blocks] : step.vars) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& b : blocks) { arr.push_back(to_json(b)); }
    vars[k] = arr;
  }
  j["vars"] = vars;
  if (!step.permutation.empty()) { j["permutation"] = step.permutation; }
  return j;
}

std::string to_jsonl(const Trace& trace, bool include_time)
{
  std::string out;
  for (const auto& s : trace.steps) {
    out += to_json(s, include_time).dump();
    out += '\n';
  }
  return out;
}

void write_jsonl(const Trace& trace, const std::string& path)
{
  std::ofstream f(path, std::ios::binary);
  if (!f) { throw Error("cannot open trace output '" + path + "'"); }
  f << to_jsonl(trace);
  if (!f) { throw Error("failed writing trace output '" + path + "'"); }
}

} // namespace dualkit
