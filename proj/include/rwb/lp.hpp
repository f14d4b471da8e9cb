#pragma once

// LP model container, the built-in revised simplex solver and the external
// backend adapter.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace rwb {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Relation { LessEqual, Equal, GreaterEqual };
enum class Sense { Minimize, Maximize };
enum class LPStatus { Optimal, Infeasible, Unbounded };

const char* to_string(LPStatus status);

using LPTerms = std::vector<std::pair<std::size_t, double>>;

struct LPVariable {
  std::string name;
  double lower = 0.0;  // -kInf for a free variable
  double upper = kInf;
};

struct LPRow {
  std::string name;
  LPTerms terms;
  Relation relation = Relation::LessEqual;
  double rhs = 0.0;
};

class LPModel {
 public:
  std::size_t add_variable(std::string name, double lower = 0.0, double upper = kInf);
  std::size_t add_free_variable(std::string name) { return add_variable(std::move(name), -kInf, kInf); }
  /// Duplicate entries in terms are merged. Throws ModelError on unknown variables.
  std::size_t add_constraint(std::string name, LPTerms terms, Relation relation, double rhs);
  void set_objective(Sense sense, LPTerms terms, double constant = 0.0);

  std::size_t num_variables() const { return variables_.size(); }
  std::size_t num_constraints() const { return rows_.size(); }
  const std::vector<LPVariable>& variables() const { return variables_; }
  const std::vector<LPRow>& rows() const { return rows_; }
  Sense sense() const { return sense_; }
  const LPTerms& objective() const { return objective_; }
  double objective_constant() const { return objective_constant_; }

  double evaluate_objective(const std::vector<double>& x) const;
  /// Largest violation of any row or variable bound at x.
  double max_violation(const std::vector<double>& x) const;

 private:
  std::vector<LPVariable> variables_;
  std::vector<LPRow> rows_;
  Sense sense_ = Sense::Minimize;
  LPTerms objective_;
  double objective_constant_ = 0.0;
};

enum class LPRoute {
  Automatic,  // dual route when the inequality form has more rows than columns
  Primal,
  Dual,
};

struct LPConfig {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  LPRoute route = LPRoute::Automatic;
  std::size_t max_iterations = 0;  // 0 picks a limit from the problem size
};

struct LPSolution {
  LPStatus status = LPStatus::Infeasible;
  std::vector<double> values;
  double objective = 0.0;
  double max_residual = 0.0;
  /// Row multipliers y (minimization sense): c = sum_i y_i a_i + reduced costs,
  /// with y_i <= 0 on <= rows and y_i >= 0 on >= rows. Filled when Optimal.
  std::vector<double> duals;
  std::size_t iterations = 0;
};

/// Two-phase revised simplex with Dantzig pricing, Harris ratio test, and
/// Bland's rule once 2 x (row count) consecutive degenerate pivots occur.
/// Throws NumericalFailure when the final residual exceeds 1e-6.
LPSolution solve_lp(const LPModel& model, const LPConfig& config = {});

/// Objective of the dual certificate carried by an Optimal solution (in the
/// model's own sense), and the largest sign or stationarity violation of it.
double dual_objective(const LPModel& model, const LPSolution& solution);
double dual_infeasibility(const LPModel& model, const LPSolution& solution);

/// Writes the model in CPLEX LP file syntax.
void write_lp_file(const LPModel& model, std::ostream& os);

/// Solves through an out-of-process HiGHS adapter script (python3 + scipy).
/// Throws AdapterUnavailable when the interpreter, the script or scipy is missing.
LPSolution solve_lp_external(const LPModel& model, const std::string& adapter_script = {});

/// Default adapter script path baked in at build time.
std::string default_adapter_script();

}  // namespace rwb
