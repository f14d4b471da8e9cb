#pragma once

// The finite bound LPs: error bounds (upper and lower) and comparison bounds.

#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "rwb/flow.hpp"
#include "rwb/linfunc.hpp"
#include "rwb/lp.hpp"
#include "rwb/measure.hpp"
#include "rwb/walk.hpp"

namespace rwb {

enum class BoundKind { UpperError, LowerError, ComparisonUpper, ComparisonLower };

const char* to_string(BoundKind kind);
/// Accepts upper, lower, cmp-upper, cmp-lower.
std::optional<BoundKind> parse_bound_kind(std::string_view text);

struct BoundModel {
  RandomWalkSpec original;
  RandomWalkSpec perturbed;
  std::shared_ptr<const StationaryMeasure> measure;
  CLinearFn performance;
  bool performance_nonneg = false;
};

/// Everything the bound LPs share: refinements, Delta, flows and moments.
struct BoundContext {
  BoundModel model;
  Refinement refinement;  // canonical refinement carrying the flow subproblems
  /// Reach-2 refinement: c(n + d) is constant on each of its cells for every
  /// offset |d_i| <= 2 that appears in a flow window.
  Refinement eval;
  std::vector<std::size_t> eval_cell_owner;  // eval cell -> refinement cell
  PerturbationDelta delta;
  FlowSolution flows;
  std::vector<ComponentMoments> moments;
};

/// Refines, computes Delta and the component moments and solves all flows.
/// Throws PartitionMismatch, DivergentMass or InternalError.
BoundContext prepare_bounds(BoundModel model, const FlowConfig& flow_config = {});

/// max{delta * x, -delta * y} for x, y >= 0, resolved by the sign of delta.
AffineExpr resolve_max_term(double delta, const AffineExpr& x, const AffineExpr& y);

struct VariableLayout {
  std::size_t dim = 0;
  std::vector<std::size_t> fbar;  // per component: first of M+1 coefficient ids
  std::vector<std::size_t> g;     // kNone for comparison kinds
  std::vector<std::map<Step, std::size_t>> a;  // per component and step u != 0
  std::vector<std::map<Step, std::size_t>> b;
  std::size_t count = 0;
};

struct BoundLP {
  BoundKind kind = BoundKind::UpperError;
  LPModel model;
  VariableLayout layout;
  std::size_t generated_rows = 0;  // before identical rows are merged
};

BoundLP build_bound_lp(BoundKind kind, const BoundContext& context);

struct Certificate {
  CLinearFn fbar;
  CLinearFn g;  // zero for comparison kinds
  std::map<Step, CLinearFn> a;
  std::map<Step, CLinearFn> b;
};

struct BoundResult {
  BoundKind kind = BoundKind::UpperError;
  LPStatus status = LPStatus::Infeasible;
  double value = 0.0;          // bound on the performance measure (NaN unless Optimal)
  double lp_objective = 0.0;   // before clamping
  bool clamped = false;
  Certificate certificate;
  std::size_t variables = 0;
  std::size_t constraints = 0;
  std::size_t iterations = 0;
  double residual = 0.0;

  bool optimal() const { return status == LPStatus::Optimal; }
};

struct BoundSolveConfig {
  LPConfig lp;
  LPBackend backend = LPBackend::Builtin;
};

BoundResult solve_bound(BoundKind kind, const BoundContext& context, const BoundSolveConfig& config = {});

/// Re-evaluates every constraint family pointwise from the certificate at all
/// corners of all evaluation cells, plus the growth along unbounded
/// dimensions, and returns the largest violation.
double replay_certificate(const BoundContext& context, const BoundResult& result);

struct SandwichResult {
  BoundResult upper;
  BoundResult lower;
  BoundResult comparison_upper;
  BoundResult comparison_lower;

  /// Both error bounds were found, so the performance measure exists.
  bool exists() const { return upper.optimal() && lower.optimal(); }
  std::optional<double> best_upper() const;
  std::optional<double> best_lower() const;
};

SandwichResult sandwich(const BoundContext& context, const BoundSolveConfig& config = {});

/// Kind, status, value and certificate coefficients per component.
void write_report(const BoundResult& result, const Partition& partition, std::ostream& os);

/// Status token used in reports and CSV files (OPTIMAL, INFEASIBLE, UNBOUNDED, CLAMPED).
const char* status_token(const BoundResult& result);

}  // namespace rwb
