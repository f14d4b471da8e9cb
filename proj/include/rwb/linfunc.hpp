#pragma once

// Component-wise affine functions, their shifts onto a refinement, and the
// reduction of "affine function <= 0 on a box" to finitely many linear rows.

#include <cstdint>
#include <span>
#include <vector>

#include "rwb/lattice.hpp"

namespace rwb {

using VarId = std::uint32_t;

/// Coefficients below this fraction of the largest one in an expression are dropped.
inline constexpr double kNegligible = 1e-12;

/// constant + sum_v coef_v * x_v over LP decision variables.
struct AffineExpr {
  std::vector<std::pair<VarId, double>> terms;  // sorted by VarId, no zero coefficients
  double constant = 0.0;

  static AffineExpr variable(VarId v, double coef = 1.0);
  static AffineExpr scalar(double c);

  /// this += scale * other
  AffineExpr& add(const AffineExpr& other, double scale = 1.0);
  AffineExpr& scale(double s);
  double evaluate(std::span<const double> x) const;
  bool is_constant() const { return terms.empty(); }

  bool operator==(const AffineExpr&) const = default;
};

/// Sums many scaled expressions and normalizes once.
class AffineAccumulator {
 public:
  void add(const AffineExpr& e, double scale = 1.0);
  void add_term(VarId v, double coef) { pending_.emplace_back(v, coef); }
  void add_constant(double c) { constant_ += c; }
  AffineExpr take();

 private:
  std::vector<std::pair<VarId, double>> pending_;
  double constant_ = 0.0;
};

/// H(n) = h_{c(n),0} + sum_i h_{c(n),i} n_i with numeric coefficients.
struct CLinearFn {
  std::size_t dim = 0;
  std::vector<std::vector<double>> coef;  // [k][0..M]

  static CLinearFn zero(std::size_t components, std::size_t dim);
  bool operator==(const CLinearFn&) const = default;
};

double evaluate(const CLinearFn& h, const Partition& partition, std::span<const std::int64_t> n);

/// C-linear function whose coefficients are affine in LP variables.
struct SymbolicCLinear {
  std::size_t dim = 0;
  std::vector<std::vector<AffineExpr>> coef;  // [k][0..M]

  static SymbolicCLinear from_numeric(const CLinearFn& h);
};

/// Z-linear function on the cells of a refinement.
struct SymbolicZLinear {
  std::size_t dim = 0;
  std::vector<std::vector<AffineExpr>> coef;  // [j][0..M]
};

/// Coefficients of G(n) = H(n + d) on cell j. Throws StepNotAllowed.
std::vector<AffineExpr> shift_cell(const SymbolicCLinear& h, const Refinement& refinement, std::size_t j,
                                   std::span<const int> d);

SymbolicZLinear shift(const SymbolicCLinear& h, const Refinement& refinement, std::span<const int> u);
SymbolicZLinear shift(const CLinearFn& h, const Refinement& refinement, std::span<const int> u);

/// Value of a symbolic function at a state (affine in the LP variables).
AffineExpr evaluate_at(std::span<const AffineExpr> coeffs, std::span<const std::int64_t> n);

/// A row "expr <= 0".
struct LinearConstraint {
  AffineExpr expr;
  std::size_t cell = kNone;
};

/// E <= 0 on the whole box iff E <= 0 on its corners and every coefficient of
/// an unbounded dimension is <= 0. Appends those rows to out.
void corner_reduce_cell(std::span<const AffineExpr> coeffs, const LatticeBox& box, std::size_t cell,
                        std::vector<LinearConstraint>& out);

std::vector<LinearConstraint> corner_reduce(const SymbolicZLinear& e, const Refinement& refinement);

}  // namespace rwb
