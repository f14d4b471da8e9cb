#include "rwb/flow.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <ostream>

#include "rwb/errors.hpp"

namespace rwb {

namespace {

constexpr double kReducedCostTol = 1e-9;

Step add(std::span<const int> a, std::span<const int> b) {
  Step s(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) s[i] = a[i] + b[i];
  return s;
}

}  // namespace

FlowProblem build_flow_problem(const Refinement& refinement, const RandomWalkSpec& walk, std::size_t j,
                               std::span<const int> u) {
  const std::size_t dim = refinement.cells().dim();
  const Step step(u.begin(), u.end());
  if (is_zero(u)) throw StepNotAllowed(j, step);
  const std::size_t target = neighbor_component(refinement, j, u);
  const std::size_t parent = refinement.parent(j);
  const auto& cells = refinement.cells();

  FlowProblem fp;
  fp.cell = j;
  fp.u = step;
  // Node offsets, kept sorted by offset code so the problem is canonical.
  std::vector<std::size_t> codes;
  for (const auto& d : cells.steps(j)) codes.push_back(offset_code(d));
  for (const auto& w : walk.partition.steps(target)) codes.push_back(offset_code(add(u, w)));
  std::sort(codes.begin(), codes.end());
  codes.erase(std::unique(codes.begin(), codes.end()), codes.end());

  std::vector<std::size_t> node_of(offset_space(dim), kNone);
  double total = 0.0;
  Step shifted(dim);
  for (std::size_t code : codes) {
    Step d = decode_offset(code, dim);
    node_of[code] = fp.nodes.size();
    for (std::size_t i = 0; i < dim; ++i) shifted[i] = d[i] - u[i];
    const double dem = walk.law.get(target, shifted) - walk.law.get(parent, d);
    fp.demand.push_back(dem);
    total += dem;
    fp.nodes.push_back(std::move(d));
  }
  if (std::abs(total) > 1e-12) throw InternalError(j, step, "nonzero total demand");

  // Arcs between window nodes one lattice step apart; both ends are states of
  // the orthant, so every such step is admissible from its tail.
  const auto steps = unit_steps(dim);
  for (std::size_t a = 0; a < fp.nodes.size(); ++a) {
    for (const auto& v : steps) {
      if (is_zero(v)) continue;
      const Step head = add(fp.nodes[a], v);
      bool in_range = true;
      for (int x : head)
        if (x < -2 || x > 2) in_range = false;
      if (!in_range) continue;
      const std::size_t b = node_of[offset_code(head)];
      if (b == kNone) continue;
      fp.arcs.push_back({a, b, v});
    }
  }
  return fp;
}

double balance_residual(const FlowProblem& problem, std::span<const double> phi) {
  std::vector<double> net(problem.nodes.size(), 0.0);
  for (std::size_t a = 0; a < problem.arcs.size(); ++a) {
    net[problem.arcs[a].to] += phi[a];
    net[problem.arcs[a].from] -= phi[a];
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < net.size(); ++i) worst = std::max(worst, std::abs(net[i] - problem.demand[i]));
  return worst;
}

void dump(const FlowProblem& problem, std::ostream& os) {
  os << "cell " << problem.cell << " step " << format_vector(problem.u) << '\n';
  os << "nodes " << problem.nodes.size() << '\n';
  for (std::size_t i = 0; i < problem.nodes.size(); ++i)
    os << "  " << i << ' ' << format_vector(problem.nodes[i]) << " demand " << problem.demand[i] << '\n';
  os << "arcs " << problem.arcs.size() << '\n';
  for (const auto& arc : problem.arcs) os << "  " << arc.from << " -> " << arc.to << " v " << format_vector(arc.v) << '\n';
}

namespace {

// Min-cost flow over the arcs with allowed[a] set; returns flows per arc and
// the node multipliers.
std::pair<std::vector<double>, std::vector<double>> solve_flow_lp(const FlowProblem& problem,
                                                                  const std::vector<double>& cost,
                                                                  const std::vector<char>& allowed,
                                                                  const FlowConfig& config) {
  LPModel model;
  LPTerms objective;
  std::vector<LPTerms> rows(problem.nodes.size());
  std::vector<std::size_t> arc_of;
  for (std::size_t a = 0; a < problem.arcs.size(); ++a) {
    if (!allowed[a]) continue;
    const auto& arc = problem.arcs[a];
    const std::size_t var = model.add_variable("phi" + std::to_string(a));
    arc_of.push_back(a);
    objective.emplace_back(var, cost[a]);
    rows[arc.to].emplace_back(var, 1.0);
    rows[arc.from].emplace_back(var, -1.0);
  }
  for (std::size_t i = 0; i < rows.size(); ++i)
    model.add_constraint("node" + std::to_string(i), std::move(rows[i]), Relation::Equal, problem.demand[i]);
  model.set_objective(Sense::Minimize, std::move(objective));
  LPConfig lp = config.lp;
  lp.route = LPRoute::Primal;
  LPSolution sol = config.backend == LPBackend::External ? solve_lp_external(model) : solve_lp(model, lp);
  if (sol.status != LPStatus::Optimal) throw InternalError(problem.cell, problem.u, to_string(sol.status));
  std::vector<double> phi(problem.arcs.size(), 0.0);
  for (std::size_t v = 0; v < arc_of.size(); ++v) phi[arc_of[v]] = std::max(0.0, sol.values[v]);
  return {std::move(phi), std::move(sol.duals)};
}

}  // namespace

CellStepFlow solve_flow_problem(FlowProblem problem, const FlowConfig& config) {
  CellStepFlow out;
  const std::size_t arcs = problem.arcs.size();
  out.phi.assign(arcs, 0.0);
  bool any = false;
  for (double d : problem.demand)
    if (d != 0.0) any = true;
  if (any) {
    std::vector<double> cost(arcs, 1.0);
    if (config.weight)
      for (std::size_t a = 0; a < arcs; ++a) cost[a] = config.weight(problem, problem.arcs[a]);
    std::vector<char> allowed(arcs, 1);
    auto [phi, duals] = solve_flow_lp(problem, cost, allowed, config);
    if (config.shortest_steps && !config.weight) {
      // Arcs with a positive reduced cost carry no flow in any optimal
      // solution; re-optimizing over the rest keeps the total minimal.
      for (std::size_t a = 0; a < arcs; ++a) {
        const auto& arc = problem.arcs[a];
        const double reduced = cost[a] - duals[arc.to] + duals[arc.from];
        allowed[a] = reduced <= kReducedCostTol;
        cost[a] = 0.0;
        for (int x : arc.v) cost[a] += std::abs(x);
      }
      phi = solve_flow_lp(problem, cost, allowed, config).first;
    }
    out.phi = std::move(phi);
  }
  for (double x : out.phi) out.total += x;
  out.residual = balance_residual(problem, out.phi);
  out.problem = std::move(problem);
  return out;
}

FlowSolution::FlowSolution(const Refinement& refinement, std::vector<CellStepFlow> entries)
    : dim_(refinement.cells().dim()), entries_(std::move(entries)) {
  const std::size_t space = offset_space(dim_);
  index_.assign(refinement.size() * space, kNone);
  for (std::size_t e = 0; e < entries_.size(); ++e)
    index_[entries_[e].problem.cell * space + offset_code(entries_[e].problem.u)] = e;
}

const CellStepFlow* FlowSolution::find(std::size_t j, std::span<const int> u) const {
  for (int x : u)
    if (x < -1 || x > 1) return nullptr;
  const std::size_t space = offset_space(dim_);
  if ((j + 1) * space > index_.size()) return nullptr;
  const std::size_t e = index_[j * space + offset_code(u)];
  return e == kNone ? nullptr : &entries_[e];
}

std::size_t FlowSolution::variable_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.problem.arcs.size();
  return n;
}

double FlowSolution::max_residual() const {
  double worst = 0.0;
  for (const auto& e : entries_) worst = std::max(worst, e.residual);
  return worst;
}

namespace {

struct Task {
  std::size_t cell;
  Step u;
};

std::vector<Task> flow_tasks(const Refinement& refinement) {
  std::vector<Task> tasks;
  for (std::size_t j = 0; j < refinement.size(); ++j)
    for (const auto& u : refinement.cells().steps(j))
      if (!is_zero(u)) tasks.push_back({j, u});
  return tasks;
}

}  // namespace

FlowSolution solve_all_flows(const Refinement& refinement, const RandomWalkSpec& walk, const FlowConfig& config) {
  const std::vector<Task> tasks = flow_tasks(refinement);
  std::vector<CellStepFlow> entries(tasks.size());
  std::exception_ptr error;
  const auto count = static_cast<std::ptrdiff_t>(tasks.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t t = 0; t < count; ++t) {
    try {
      const auto& task = tasks[static_cast<std::size_t>(t)];
      entries[static_cast<std::size_t>(t)] =
          solve_flow_problem(build_flow_problem(refinement, walk, task.cell, task.u), config);
    } catch (...) {
#pragma omp critical(rwb_flow_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return FlowSolution(refinement, std::move(entries));
}

FlowSolution solve_all_flows_serial(const Refinement& refinement, const RandomWalkSpec& walk,
                                    const FlowConfig& config) {
  std::vector<CellStepFlow> entries;
  for (const auto& task : flow_tasks(refinement))
    entries.push_back(solve_flow_problem(build_flow_problem(refinement, walk, task.cell, task.u), config));
  return FlowSolution(refinement, std::move(entries));
}

double phi_lookup(const FlowSolution& solution, const Refinement& refinement, std::span<const std::int64_t> n,
                  std::span<const int> u, std::span<const std::int64_t> m, std::span<const int> v) {
  if (is_zero(v)) return 0.0;
  const CellStepFlow* entry = solution.find(refinement.locate(n), u);
  if (!entry) return 0.0;
  const std::size_t dim = n.size();
  Step d(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    const std::int64_t diff = m[i] - n[i];
    if (diff < -2 || diff > 2) return 0.0;
    d[i] = static_cast<int>(diff);
  }
  const auto& nodes = entry->problem.nodes;
  for (std::size_t a = 0; a < entry->problem.arcs.size(); ++a) {
    const auto& arc = entry->problem.arcs[a];
    if (nodes[arc.from] == d && arc.v == Step(v.begin(), v.end())) return entry->phi[a];
  }
  return 0.0;
}

}  // namespace rwb
