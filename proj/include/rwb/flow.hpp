#pragma once

// Flow subproblems whose optimal flows phi express the bias recursion
// D^{t+1}(n, n+u) = F(n+u) - F(n) + sum phi(n,u,m,v) D^t(m, m+v).

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rwb/lattice.hpp"
#include "rwb/lp.hpp"
#include "rwb/walk.hpp"

namespace rwb {

struct FlowArc {
  std::size_t from;  // node index
  std::size_t to;
  Step v;            // nodes[to] - nodes[from]
};

/// Subproblem (j, u): nodes are offsets d in N_j united with u + N_{c(j,u)};
/// each node needs inflow - outflow = p_{c(j,u), d-u} - p_{j,d}.
struct FlowProblem {
  std::size_t cell = 0;
  Step u;
  std::vector<Step> nodes;
  std::vector<double> demand;
  std::vector<FlowArc> arcs;
};

/// Throws StepNotAllowed when u is zero or not admissible from the cell.
FlowProblem build_flow_problem(const Refinement& refinement, const RandomWalkSpec& walk, std::size_t j,
                               std::span<const int> u);

/// max over nodes of |inflow - outflow - demand|.
double balance_residual(const FlowProblem& problem, std::span<const double> phi);

/// Node/arc/demand table.
void dump(const FlowProblem& problem, std::ostream& os);

using ArcWeight = std::function<double(const FlowProblem&, const FlowArc&)>;

enum class LPBackend { Builtin, External };

struct FlowConfig {
  LPConfig lp;
  LPBackend backend = LPBackend::Builtin;
  ArcWeight weight;  // empty: every arc has weight 1
  /// Among the optimal flows, pick one minimizing the L1 length of the steps
  /// carried. Ignored when a custom weight is set.
  bool shortest_steps = true;
};

struct CellStepFlow {
  FlowProblem problem;
  std::vector<double> phi;  // per arc
  double total = 0.0;
  double residual = 0.0;
};

class FlowSolution {
 public:
  FlowSolution() = default;
  FlowSolution(const Refinement& refinement, std::vector<CellStepFlow> entries);

  const std::vector<CellStepFlow>& entries() const { return entries_; }
  /// Entry for (j, u), or nullptr when u is zero or not admissible from cell j.
  const CellStepFlow* find(std::size_t j, std::span<const int> u) const;

  std::size_t variable_count() const;
  double max_residual() const;

 private:
  std::size_t dim_ = 0;
  std::vector<CellStepFlow> entries_;
  std::vector<std::size_t> index_;  // [j * 3^M-space + code] -> entry
};

/// Solves every (j, u) subproblem in parallel. Throws InternalError when a
/// subproblem is not Optimal.
FlowSolution solve_all_flows(const Refinement& refinement, const RandomWalkSpec& walk, const FlowConfig& config = {});

/// Single-threaded reference with identical results.
FlowSolution solve_all_flows_serial(const Refinement& refinement, const RandomWalkSpec& walk,
                                    const FlowConfig& config = {});

CellStepFlow solve_flow_problem(FlowProblem problem, const FlowConfig& config = {});

/// phi(n, u, m, v): the stored flow on arc (m - n, m - n + v) of subproblem
/// (z(n), u), or 0 when either end lies outside the window.
double phi_lookup(const FlowSolution& solution, const Refinement& refinement, std::span<const std::int64_t> n,
                  std::span<const int> u, std::span<const std::int64_t> m, std::span<const int> v);

}  // namespace rwb
