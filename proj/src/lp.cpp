#include "rwb/lp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include <unistd.h>

#include "rwb/errors.hpp"
#include "rwb/lattice.hpp"
#include "rwb/linfunc.hpp"

#ifndef RWB_ADAPTER_SCRIPT
#define RWB_ADAPTER_SCRIPT ""
#endif

namespace rwb {

const char* to_string(LPStatus status) {
  switch (status) {
    case LPStatus::Optimal: return "OPTIMAL";
    case LPStatus::Infeasible: return "INFEASIBLE";
    case LPStatus::Unbounded: return "UNBOUNDED";
  }
  return "UNKNOWN";
}

namespace {

LPTerms merge_terms(LPTerms terms) {
  std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  LPTerms out;
  for (const auto& [j, a] : terms) {
    if (!out.empty() && out.back().first == j)
      out.back().second += a;
    else
      out.emplace_back(j, a);
  }
  double scale = 1.0;
  for (const auto& t : out) scale = std::max(scale, std::abs(t.second));
  std::erase_if(out, [&](const auto& t) { return std::abs(t.second) <= kNegligible * scale; });
  return out;
}

}  // namespace

std::size_t LPModel::add_variable(std::string name, double lower, double upper) {
  if (lower > upper) throw ModelError("variable " + name + " has lower bound above upper bound");
  if (lower == kInf || upper == -kInf) throw ModelError("variable " + name + " has an empty domain");
  variables_.push_back({std::move(name), lower, upper});
  return variables_.size() - 1;
}

std::size_t LPModel::add_constraint(std::string name, LPTerms terms, Relation relation, double rhs) {
  for (const auto& t : terms)
    if (t.first >= variables_.size()) throw ModelError("constraint " + name + " references an unknown variable");
  rows_.push_back({std::move(name), merge_terms(std::move(terms)), relation, rhs});
  return rows_.size() - 1;
}

void LPModel::set_objective(Sense sense, LPTerms terms, double constant) {
  for (const auto& t : terms)
    if (t.first >= variables_.size()) throw ModelError("objective references an unknown variable");
  sense_ = sense;
  objective_ = merge_terms(std::move(terms));
  objective_constant_ = constant;
}

double LPModel::evaluate_objective(const std::vector<double>& x) const {
  double v = objective_constant_;
  for (const auto& [j, c] : objective_) v += c * x[j];
  return v;
}

double LPModel::max_violation(const std::vector<double>& x) const {
  double worst = 0.0;
  for (std::size_t j = 0; j < variables_.size(); ++j) {
    worst = std::max(worst, variables_[j].lower - x[j]);
    worst = std::max(worst, x[j] - variables_[j].upper);
  }
  for (const auto& row : rows_) {
    double lhs = 0.0;
    for (const auto& [j, a] : row.terms) lhs += a * x[j];
    const double gap = lhs - row.rhs;
    switch (row.relation) {
      case Relation::LessEqual: worst = std::max(worst, gap); break;
      case Relation::GreaterEqual: worst = std::max(worst, -gap); break;
      case Relation::Equal: worst = std::max(worst, std::abs(gap)); break;
    }
  }
  return worst;
}

namespace {

// Column-major sparse matrix.
struct SparseColumns {
  std::size_t rows = 0;
  std::vector<std::size_t> start{0};
  std::vector<std::size_t> index;
  std::vector<double> value;

  std::size_t cols() const { return start.size() - 1; }
  void add_column(const LPTerms& entries) {
    for (const auto& [i, a] : entries) {
      index.push_back(i);
      value.push_back(a);
    }
    start.push_back(index.size());
  }
};

struct StandardResult {
  LPStatus status = LPStatus::Infeasible;
  std::vector<double> x;  // structural columns
  std::vector<double> y;  // row multipliers of the original (unflipped) rows
  std::size_t iterations = 0;
};

constexpr double kMinPivotRatio = 1e-12;
constexpr double kAbsPivotTol = 1e-9;
constexpr double kRelPivotTol = 1e-7;
constexpr double kPerturbation = 1e-7;
constexpr std::size_t kMaxRepairs = 20;

// min c^T x  s.t.  A x = b, x >= 0.
class RevisedSimplex {
 public:
  RevisedSimplex(const SparseColumns& A, std::vector<double> b, std::vector<double> c, const LPConfig& config)
      : A_(A), b_(std::move(b)), c_(std::move(c)), config_(config), m_(A.rows), n_(A.cols()) {
    row_sign_.assign(m_, 1.0);
    for (std::size_t i = 0; i < m_; ++i)
      if (b_[i] < 0.0) {
        row_sign_[i] = -1.0;
        b_[i] = -b_[i];
      }
    bmax_ = 0.0;
    for (double v : b_) bmax_ = std::max(bmax_, v);
    max_iterations_ = config.max_iterations ? config.max_iterations : std::max<std::size_t>(20000, 30 * (m_ + n_));
  }

  StandardResult run() {
    initial_basis();
    StandardResult out;
    if (has_artificial_) {
      std::vector<double> cost(n_ + m_, 0.0);
      for (std::size_t i = 0; i < m_; ++i) cost[n_ + i] = 1.0;
      if (solve_perturbed(cost, true) != LPStatus::Optimal)
        throw NumericalFailure("phase one of the simplex did not terminate", kInf);
      double infeas = 0.0;
      for (std::size_t i = 0; i < m_; ++i)
        if (basis_[i] >= n_) infeas += std::max(0.0, xb_[i]);
      if (infeas > config_.feasibility_tol * 100.0 * (1.0 + bmax_)) {
        out.status = LPStatus::Infeasible;
        out.iterations = iterations_;
        return out;
      }
      drive_out_artificials();
    }
    std::vector<double> cost(n_ + m_, 0.0);
    std::copy(c_.begin(), c_.end(), cost.begin());
    out.status = solve_perturbed(cost, false);
    out.iterations = iterations_;
    if (out.status != LPStatus::Optimal) return out;
    out.x.assign(n_, 0.0);
    for (std::size_t i = 0; i < m_; ++i)
      if (basis_[i] < n_) out.x[basis_[i]] = std::max(0.0, xb_[i]);
    out.y.resize(m_);
    for (std::size_t i = 0; i < m_; ++i) out.y[i] = row_sign_[i] * y_[i];
    return out;
  }

 private:
  // Shifts the right-hand side so every basic variable starts strictly
  // positive, optimizes, then restores it and removes the remaining
  // infeasibility with dual simplex pivots. An unbounded ray does not depend on
  // the right-hand side, so that verdict stands as is.
  LPStatus solve_perturbed(const std::vector<double>& cost, bool phase_one) {
    const std::vector<double> original = b_;
    reinvert();
    std::vector<double> shift(m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      if (locked_[i]) continue;
      const auto h = static_cast<double>((i * 2654435761ULL) % 1000ULL) / 1000.0;
      const double target = kPerturbation * (1.0 + bmax_) * (1.0 + h);
      shift[i] = std::max(0.0, target - xb_[i]);
    }
    add_basis_times(shift, b_);
    LPStatus status = optimize(cost, phase_one);
    b_ = original;
    reinvert();
    if (status != LPStatus::Optimal) return status;
    compute_duals(cost);
    if (!dual_cleanup(cost)) return LPStatus::Infeasible;
    return optimize(cost, phase_one);
  }

  // out += B v for the current basis B.
  void add_basis_times(const std::vector<double>& v, std::vector<double>& out) const {
    for (std::size_t i = 0; i < m_; ++i) {
      if (v[i] == 0.0) continue;
      const std::size_t j = basis_[i];
      if (j >= n_) {
        out[j - n_] += v[i];
        continue;
      }
      for (std::size_t p = A_.start[j]; p < A_.start[j + 1]; ++p)
        out[A_.index[p]] += A_.value[p] * row_sign_[A_.index[p]] * v[i];
    }
  }

  // Dual simplex from a dual feasible basis. False when the rows cannot be
  // made feasible.
  bool dual_cleanup(const std::vector<double>& cost) {
    std::vector<double> alpha;
    std::vector<double> rho(m_);
    const double feas = config_.feasibility_tol * (1.0 + bmax_);
    while (true) {
      if (iterations_ >= max_iterations_) throw NumericalFailure("simplex iteration limit reached", kInf);
      if (since_reinvert_ >= 100 && (since_reinvert_ >= 1000 || basis_residual() > 1e-8 * (1.0 + bmax_))) {
        reinvert();
        compute_duals(cost);
      }
      std::size_t r = kNone;
      double worst = -feas;
      for (std::size_t i = 0; i < m_; ++i)
        if (!locked_[i] && xb_[i] < worst) {
          worst = xb_[i];
          r = i;
        }
      if (r == kNone) return true;
      std::copy(&binv_[r * m_], &binv_[r * m_] + m_, rho.begin());
      double amax = 0.0;
      std::vector<double> row(n_, 0.0);
      for (std::size_t j = 0; j < n_; ++j) {
        if (in_basis_[j]) continue;
        row[j] = column_dot(j, rho);
        amax = std::max(amax, std::abs(row[j]));
      }
      const double piv_tol = std::max(kAbsPivotTol, kRelPivotTol * amax);
      std::size_t q = kNone;
      double best_ratio = kInf;
      double best_alpha = 0.0;
      for (std::size_t j = 0; j < n_; ++j) {
        if (in_basis_[j] || row[j] >= -piv_tol) continue;
        const double d = std::max(0.0, cost[j] - column_dot(j, y_));
        const double ratio = d / -row[j];
        if (ratio < best_ratio - 1e-12 || (ratio <= best_ratio + 1e-12 && -row[j] > best_alpha)) {
          best_ratio = std::min(best_ratio, ratio);
          best_alpha = -row[j];
          q = j;
        }
      }
      if (q == kNone) return false;
      ftran(q, alpha);
      const double theta = xb_[r] / alpha[r];
      const double dq = cost[q] - column_dot(q, y_);
      const double f = dq / alpha[r];
      for (std::size_t k = 0; k < m_; ++k) y_[k] += f * rho[k];
      pivot(r, q, alpha, theta);
    }
  }

 private:
  double column_dot(std::size_t j, const std::vector<double>& v) const {
    if (j >= n_) return v[j - n_];
    double s = 0.0;
    for (std::size_t p = A_.start[j]; p < A_.start[j + 1]; ++p) s += v[A_.index[p]] * A_.value[p] * row_sign_[A_.index[p]];
    return s;
  }

  // alpha = Binv * A_j
  void ftran(std::size_t j, std::vector<double>& alpha) const {
    alpha.assign(m_, 0.0);
    if (j >= n_) {
      const std::size_t r = j - n_;
      for (std::size_t i = 0; i < m_; ++i) alpha[i] = binv_[i * m_ + r];
      return;
    }
    for (std::size_t p = A_.start[j]; p < A_.start[j + 1]; ++p) {
      const std::size_t r = A_.index[p];
      const double a = A_.value[p] * row_sign_[r];
      for (std::size_t i = 0; i < m_; ++i) alpha[i] += binv_[i * m_ + r] * a;
    }
  }

  void initial_basis() {
    basis_.assign(m_, kNone);
    in_basis_.assign(n_ + m_, false);
    binv_.assign(m_ * m_, 0.0);
    xb_.assign(m_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) {
      if (A_.start[j + 1] - A_.start[j] != 1) continue;
      const std::size_t r = A_.index[A_.start[j]];
      const double a = A_.value[A_.start[j]] * row_sign_[r];
      if (a < 1e-6 || basis_[r] != kNone) continue;
      basis_[r] = j;
      in_basis_[j] = true;
      binv_[r * m_ + r] = 1.0 / a;
      xb_[r] = b_[r] / a;
    }
    has_artificial_ = false;
    for (std::size_t r = 0; r < m_; ++r) {
      if (basis_[r] != kNone) continue;
      basis_[r] = n_ + r;
      in_basis_[n_ + r] = true;
      binv_[r * m_ + r] = 1.0;
      xb_[r] = b_[r];
      has_artificial_ = true;
    }
    locked_.assign(m_, false);
    rejected_.assign(n_, 0);
  }

  Eigen::MatrixXd basis_matrix() const {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(m_));
    for (std::size_t i = 0; i < m_; ++i) {
      const std::size_t j = basis_[i];
      const auto col = static_cast<Eigen::Index>(i);
      if (j >= n_) {
        B(static_cast<Eigen::Index>(j - n_), col) = 1.0;
        continue;
      }
      for (std::size_t p = A_.start[j]; p < A_.start[j + 1]; ++p)
        B(static_cast<Eigen::Index>(A_.index[p]), col) = A_.value[p] * row_sign_[A_.index[p]];
    }
    return B;
  }

  // Swaps dependent basic columns for artificials on the rows they leave
  // uncovered; the artificials are held at zero.
  void repair_basis(const Eigen::MatrixXd& B) {
    if (++repairs_ > kMaxRepairs) throw NumericalFailure("singular simplex basis", kInf);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
    lu.setThreshold(1e-11);
    const auto rank = static_cast<std::size_t>(lu.rank());
    const auto& q = lu.permutationQ().indices();
    const auto& p = lu.permutationP().indices();
    // Rows pivoted after the rank are not spanned by the kept columns.
    std::vector<std::size_t> uncovered;
    for (std::size_t r = 0; r < m_; ++r)
      if (static_cast<std::size_t>(p(static_cast<Eigen::Index>(r))) >= rank) uncovered.push_back(r);
    std::size_t next = 0;
    for (std::size_t k = rank; k < m_; ++k) {
      const auto pos = static_cast<std::size_t>(q(static_cast<Eigen::Index>(k)));
      const std::size_t row = uncovered[next++];
      in_basis_[basis_[pos]] = false;
      basis_[pos] = n_ + row;
      in_basis_[n_ + row] = true;
      locked_[pos] = true;
    }
  }

  static bool well_conditioned(const Eigen::PartialPivLU<Eigen::MatrixXd>& lu) {
    const Eigen::VectorXd d = lu.matrixLU().diagonal().cwiseAbs();
    if (d.size() == 0) return true;
    return d.allFinite() && d.minCoeff() > kMinPivotRatio * d.maxCoeff();
  }

  void reinvert() {
    if (!reinvert_structured()) reinvert_dense();
    for (std::size_t i = 0; i < m_; ++i) {
      double s = 0.0;
      const double* row = &binv_[i * m_];
      for (std::size_t k = 0; k < m_; ++k) s += row[k] * b_[k];
      xb_[i] = locked_[i] ? 0.0 : s;
    }
    since_reinvert_ = 0;
  }

  void reinvert_dense() {
    Eigen::MatrixXd B = basis_matrix();
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    if (!well_conditioned(lu)) {
      repair_basis(B);
      B = basis_matrix();
      lu.compute(B);
      if (!well_conditioned(lu)) throw NumericalFailure("singular simplex basis", kInf);
    }
    Eigen::MatrixXd inv = lu.inverse();
    if (!inv.allFinite()) throw NumericalFailure("singular simplex basis", kInf);
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t k = 0; k < m_; ++k)
        binv_[i * m_ + k] = inv(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
  }

  // Basic columns with a single nonzero pivot on their own row, so only the
  // block of the remaining columns on the remaining rows needs a dense LU:
  // B^-1 = [D^-1, -D^-1 W C^-1; 0, C^-1] after permutation.
  bool reinvert_structured() {
    std::vector<std::size_t> pivot_pos(m_, kNone);
    std::vector<double> pivot_value(m_, 0.0);
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < m_; ++i) {
      const std::size_t j = basis_[i];
      std::size_t row = kNone;
      double v = 0.0;
      if (j >= n_) {
        row = j - n_;
        v = 1.0;
      } else if (A_.start[j + 1] - A_.start[j] == 1) {
        row = A_.index[A_.start[j]];
        v = A_.value[A_.start[j]] * row_sign_[row];
      }
      if (row != kNone && pivot_pos[row] == kNone && std::abs(v) > kMinPivotRatio) {
        pivot_pos[row] = i;
        pivot_value[row] = v;
      } else {
        rest.push_back(i);
      }
    }
    std::vector<std::size_t> free_rows;
    std::vector<std::size_t> local(m_, kNone);
    for (std::size_t r = 0; r < m_; ++r)
      if (pivot_pos[r] == kNone) {
        local[r] = free_rows.size();
        free_rows.push_back(r);
      }
    const std::size_t t = rest.size();
    if (free_rows.size() != t) return false;

    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(t));
    for (std::size_t q = 0; q < t; ++q) {
      const std::size_t j = basis_[rest[q]];
      if (j >= n_) {
        C(static_cast<Eigen::Index>(local[j - n_]), static_cast<Eigen::Index>(q)) = 1.0;
        continue;
      }
      for (std::size_t p = A_.start[j]; p < A_.start[j + 1]; ++p)
        if (local[A_.index[p]] != kNone)
          C(static_cast<Eigen::Index>(local[A_.index[p]]), static_cast<Eigen::Index>(q)) =
              A_.value[p] * row_sign_[A_.index[p]];
    }
    Eigen::MatrixXd cinv;
    if (t > 0) {
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(C);
      if (!well_conditioned(lu)) return false;
      cinv = lu.inverse();
      if (!cinv.allFinite()) return false;
    }

    std::fill(binv_.begin(), binv_.end(), 0.0);
    for (std::size_t q = 0; q < t; ++q) {
      double* row = &binv_[rest[q] * m_];
      for (std::size_t k = 0; k < t; ++k)
        row[free_rows[k]] = cinv(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(k));
    }
    for (std::size_t r = 0; r < m_; ++r)
      if (pivot_pos[r] != kNone) binv_[pivot_pos[r] * m_ + r] = 1.0 / pivot_value[r];
    for (std::size_t q = 0; q < t; ++q) {
      const std::size_t j = basis_[rest[q]];
      if (j >= n_) continue;
      const double* crow = &binv_[rest[q] * m_];
      for (std::size_t p = A_.start[j]; p < A_.start[j + 1]; ++p) {
        const std::size_t r = A_.index[p];
        if (pivot_pos[r] == kNone) continue;
        const double f = A_.value[p] * row_sign_[r] / pivot_value[r];
        double* row = &binv_[pivot_pos[r] * m_];
        for (std::size_t k : free_rows) row[k] -= f * crow[k];
      }
    }
    return true;
  }

  void compute_duals(const std::vector<double>& cost) {
    y_.assign(m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      const double cb = cost[basis_[i]];
      if (cb == 0.0) continue;
      const double* row = &binv_[i * m_];
      for (std::size_t k = 0; k < m_; ++k) y_[k] += cb * row[k];
    }
  }

  double basis_residual() const {
    std::vector<double> r(b_);
    for (std::size_t i = 0; i < m_; ++i) {
      const std::size_t j = basis_[i];
      if (j >= n_) {
        r[j - n_] -= xb_[i];
        continue;
      }
      for (std::size_t p = A_.start[j]; p < A_.start[j + 1]; ++p)
        r[A_.index[p]] -= A_.value[p] * row_sign_[A_.index[p]] * xb_[i];
    }
    double worst = 0.0;
    for (double v : r) worst = std::max(worst, std::abs(v));
    return worst;
  }

  void pivot(std::size_t r, std::size_t q, const std::vector<double>& alpha, double theta) {
    for (std::size_t i = 0; i < m_; ++i) xb_[i] -= theta * alpha[i];
    xb_[r] = theta;
    const double ar = alpha[r];
    double* prow = &binv_[r * m_];
    for (std::size_t k = 0; k < m_; ++k) prow[k] /= ar;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r || alpha[i] == 0.0) continue;
      const double f = alpha[i];
      double* row = &binv_[i * m_];
      for (std::size_t k = 0; k < m_; ++k) row[k] -= f * prow[k];
    }
    in_basis_[basis_[r]] = false;
    basis_[r] = q;
    in_basis_[q] = true;
    locked_[r] = false;
    ++iterations_;
    ++since_reinvert_;
  }

  LPStatus optimize(const std::vector<double>& cost, bool phase_one) {
    reinvert();
    compute_duals(cost);
    std::size_t degenerate = 0;
    bool bland = false;
    bool verified = false;
    std::vector<double> alpha;
    const double tol = config_.optimality_tol;
    while (true) {
      if (iterations_ >= max_iterations_) throw NumericalFailure("simplex iteration limit reached", kInf);
      if (since_reinvert_ >= 100 && (since_reinvert_ >= 1000 || basis_residual() > 1e-8 * (1.0 + bmax_))) {
        reinvert();
        compute_duals(cost);
      }
      // Pricing.
      std::size_t q = kNone;
      double best = -tol;
      for (std::size_t j = 0; j < n_; ++j) {
        if (in_basis_[j] || rejected_[j]) continue;
        const double d = cost[j] - column_dot(j, y_);
        if (bland) {
          if (d < -tol) {
            q = j;
            break;
          }
        } else if (d < best) {
          best = d;
          q = j;
        }
      }
      if (q == kNone) {
        if (!verified && (since_reinvert_ > 0 || !rejected_list_.empty())) {
          clear_rejected();
          reinvert();
          compute_duals(cost);
          verified = true;
          continue;
        }
        if (!rejected_list_.empty()) throw NumericalFailure("no acceptable simplex pivot", kInf);
        return LPStatus::Optimal;
      }
      verified = false;
      ftran(q, alpha);
      // Ratio test. An artificial held at zero leaves as soon as it moves.
      double amax = 0.0;
      for (double a : alpha) amax = std::max(amax, std::abs(a));
      const double piv_tol = std::max(kAbsPivotTol, kRelPivotTol * amax);
      std::size_t r = kNone;
      for (std::size_t i = 0; i < m_ && r == kNone; ++i)
        if (locked_[i] && std::abs(alpha[i]) > piv_tol) r = i;
      if (r == kNone && bland) {
        double best_ratio = kInf;
        for (std::size_t i = 0; i < m_; ++i) {
          if (alpha[i] <= piv_tol) continue;
          const double ratio = std::max(0.0, xb_[i]) / alpha[i];
          if (ratio < best_ratio - 1e-12) {
            best_ratio = ratio;
            r = i;
          } else if (ratio <= best_ratio + 1e-12 && basis_[i] < basis_[r]) {
            r = i;
          }
        }
      } else if (r == kNone) {
        double theta_max = kInf;
        for (std::size_t i = 0; i < m_; ++i)
          if (alpha[i] > piv_tol)
            theta_max = std::min(theta_max, (std::max(0.0, xb_[i]) + config_.feasibility_tol) / alpha[i]);
        double best_alpha = 0.0;
        for (std::size_t i = 0; i < m_; ++i) {
          if (alpha[i] <= piv_tol) continue;
          if (std::max(0.0, xb_[i]) / alpha[i] <= theta_max && alpha[i] > best_alpha) {
            best_alpha = alpha[i];
            r = i;
          }
        }
      }
      if (r == kNone) {
        // Only pivots below the tolerance remain: try another entering column.
        if (std::any_of(alpha.begin(), alpha.end(), [](double a) { return a > kAbsPivotTol; })) {
          rejected_[q] = 1;
          rejected_list_.push_back(q);
          continue;
        }
        if (phase_one) throw NumericalFailure("phase one of the simplex is unbounded", kInf);
        return LPStatus::Unbounded;
      }
      const double theta = std::max(0.0, xb_[r]) / alpha[r];
      // Dual update before Binv changes: y += (d_q / alpha_r) * Binv[r, :].
      const double dq = cost[q] - column_dot(q, y_);
      const double f = dq / alpha[r];
      const double* prow = &binv_[r * m_];
      for (std::size_t k = 0; k < m_; ++k) y_[k] += f * prow[k];
      pivot(r, q, alpha, theta);
      clear_rejected();
      if (theta * alpha[r] <= 1e-12) {
        if (++degenerate > 2 * m_) bland = true;
      } else {
        degenerate = 0;
        bland = false;
      }
    }
  }

  void clear_rejected() {
    for (std::size_t j : rejected_list_) rejected_[j] = 0;
    rejected_list_.clear();
  }

  void drive_out_artificials() {
    std::vector<double> alpha;
    for (std::size_t r = 0; r < m_; ++r) {
      if (basis_[r] < n_) continue;
      const double* prow = &binv_[r * m_];
      std::vector<double> rho(prow, prow + m_);
      std::size_t q = kNone;
      double best = 1e-7;
      for (std::size_t j = 0; j < n_; ++j) {
        if (in_basis_[j]) continue;
        const double a = std::abs(column_dot(j, rho));
        if (a > best) {
          best = a;
          q = j;
        }
      }
      if (q == kNone) {
        locked_[r] = true;
        xb_[r] = 0.0;
        continue;
      }
      ftran(q, alpha);
      pivot(r, q, alpha, std::max(0.0, xb_[r]) / alpha[r]);
    }
  }

  const SparseColumns& A_;
  std::vector<double> b_;
  std::vector<double> c_;
  LPConfig config_;
  std::size_t m_;
  std::size_t n_;
  std::vector<double> row_sign_;
  double bmax_ = 0.0;
  std::size_t max_iterations_ = 0;

  std::vector<std::size_t> basis_;
  std::vector<bool> in_basis_;
  std::vector<bool> locked_;
  std::vector<double> binv_;
  std::vector<double> xb_;
  std::vector<double> y_;
  bool has_artificial_ = false;
  std::size_t iterations_ = 0;
  std::size_t since_reinvert_ = 0;
  std::size_t repairs_ = 0;
  std::vector<char> rejected_;
  std::vector<std::size_t> rejected_list_;
};

std::vector<double> min_sense_costs(const LPModel& model) {
  std::vector<double> c(model.num_variables(), 0.0);
  const double s = model.sense() == Sense::Maximize ? -1.0 : 1.0;
  for (const auto& [j, a] : model.objective()) c[j] += s * a;
  return c;
}

LPSolution finish(const LPModel& model, LPSolution sol) {
  if (sol.status != LPStatus::Optimal) {
    sol.values.clear();
    sol.duals.clear();
    return sol;
  }
  sol.objective = model.evaluate_objective(sol.values);
  sol.max_residual = model.max_violation(sol.values);
  if (sol.max_residual > 1e-6) throw NumericalFailure(sol.max_residual);
  return sol;
}

// Substitutions x_j = offset + sign * x'_k (or x'_k - x'_{k+1} for free variables).
LPSolution solve_primal_route(const LPModel& model, const LPConfig& config) {
  const auto& vars = model.variables();
  const std::size_t nv = vars.size();
  const std::vector<double> c = min_sense_costs(model);

  struct Map {
    std::size_t col;
    double offset;
    double sign;
    bool free;
  };
  std::vector<Map> map(nv);
  std::size_t ncols = 0;
  std::vector<std::size_t> upper_rows;  // variables needing an explicit upper-bound row
  for (std::size_t j = 0; j < nv; ++j) {
    const auto& v = vars[j];
    if (std::isfinite(v.lower)) {
      map[j] = {ncols++, v.lower, 1.0, false};
      if (std::isfinite(v.upper)) upper_rows.push_back(j);
    } else if (std::isfinite(v.upper)) {
      map[j] = {ncols++, v.upper, -1.0, false};
    } else {
      map[j] = {ncols, 0.0, 1.0, true};
      ncols += 2;
    }
  }
  const auto& rows = model.rows();
  const std::size_t m = rows.size() + upper_rows.size();
  std::vector<LPTerms> cols(ncols);
  std::vector<double> b(m, 0.0);
  std::vector<double> cost(ncols, 0.0);
  for (std::size_t j = 0; j < nv; ++j) {
    cost[map[j].col] += map[j].sign * c[j];
    if (map[j].free) cost[map[j].col + 1] -= c[j];
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double rhs = rows[i].rhs;
    for (const auto& [j, a] : rows[i].terms) {
      rhs -= a * map[j].offset;
      cols[map[j].col].emplace_back(i, a * map[j].sign);
      if (map[j].free) cols[map[j].col + 1].emplace_back(i, -a);
    }
    b[i] = rhs;
  }
  for (std::size_t t = 0; t < upper_rows.size(); ++t) {
    const std::size_t j = upper_rows[t];
    const std::size_t i = rows.size() + t;
    cols[map[j].col].emplace_back(i, 1.0);
    b[i] = vars[j].upper - vars[j].lower;
  }
  // Slack and surplus columns.
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].relation == Relation::Equal) continue;
    cols.push_back({{i, rows[i].relation == Relation::LessEqual ? 1.0 : -1.0}});
    cost.push_back(0.0);
  }
  for (std::size_t t = 0; t < upper_rows.size(); ++t) {
    cols.push_back({{rows.size() + t, 1.0}});
    cost.push_back(0.0);
  }
  SparseColumns A;
  A.rows = m;
  for (auto& col : cols) {
    std::sort(col.begin(), col.end());
    A.add_column(col);
  }
  RevisedSimplex simplex(A, b, cost, config);
  StandardResult res = simplex.run();
  LPSolution sol;
  sol.status = res.status;
  sol.iterations = res.iterations;
  if (res.status == LPStatus::Optimal) {
    sol.values.resize(nv);
    for (std::size_t j = 0; j < nv; ++j) {
      double v = map[j].offset + map[j].sign * res.x[map[j].col];
      if (map[j].free) v -= res.x[map[j].col + 1];
      sol.values[j] = v;
    }
    sol.duals.assign(res.y.begin(), res.y.begin() + static_cast<std::ptrdiff_t>(rows.size()));
  }
  return finish(model, std::move(sol));
}

// Inequality form G x <= h with x free; the standard-form dual is
// min h^T y  s.t.  G^T y = -c, y >= 0, whose simplex multipliers are x.
struct InequalityForm {
  std::vector<LPTerms> rows;
  std::vector<double> rhs;
  std::vector<std::pair<std::size_t, double>> origin;  // (model row or kNone, sign)
};

InequalityForm inequality_form(const LPModel& model) {
  InequalityForm f;
  const auto& vars = model.variables();
  for (std::size_t j = 0; j < vars.size(); ++j) {
    if (std::isfinite(vars[j].lower)) {
      f.rows.push_back({{j, -1.0}});
      f.rhs.push_back(-vars[j].lower);
      f.origin.emplace_back(kNone, 0.0);
    }
    if (std::isfinite(vars[j].upper)) {
      f.rows.push_back({{j, 1.0}});
      f.rhs.push_back(vars[j].upper);
      f.origin.emplace_back(kNone, 0.0);
    }
  }
  const auto& rows = model.rows();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.relation != Relation::GreaterEqual) {
      f.rows.push_back(row.terms);
      f.rhs.push_back(row.rhs);
      f.origin.emplace_back(i, 1.0);
    }
    if (row.relation != Relation::LessEqual) {
      LPTerms neg = row.terms;
      for (auto& t : neg) t.second = -t.second;
      f.rows.push_back(std::move(neg));
      f.rhs.push_back(-row.rhs);
      f.origin.emplace_back(i, -1.0);
    }
  }
  return f;
}

LPSolution solve_dual_route(const LPModel& model, const LPConfig& config) {
  const std::size_t nv = model.num_variables();
  const InequalityForm f = inequality_form(model);
  const std::vector<double> c = min_sense_costs(model);
  SparseColumns A;
  A.rows = nv;
  for (const auto& row : f.rows) A.add_column(row);
  std::vector<double> b(nv);
  for (std::size_t j = 0; j < nv; ++j) b[j] = -c[j];
  RevisedSimplex simplex(A, b, f.rhs, config);
  StandardResult res = simplex.run();
  LPSolution sol;
  sol.iterations = res.iterations;
  if (res.status == LPStatus::Optimal) {
    sol.status = LPStatus::Optimal;
    sol.values = res.y;
    sol.duals.assign(model.num_constraints(), 0.0);
    for (std::size_t k = 0; k < f.rows.size(); ++k) {
      const auto [i, s] = f.origin[k];
      if (i != kNone) sol.duals[i] -= s * res.x[k];
    }
    return finish(model, std::move(sol));
  }
  if (res.status == LPStatus::Unbounded) {
    sol.status = LPStatus::Infeasible;
    return sol;
  }
  // The dual is infeasible, so the primal is infeasible or unbounded. Decide
  // primal feasibility with the Farkas system: min h^T y, G^T y = 0,
  // sum y + s = 1, y, s >= 0 has a negative optimum iff G x <= h is empty.
  SparseColumns F;
  F.rows = nv + 1;
  for (const auto& row : f.rows) {
    LPTerms col = row;
    col.emplace_back(nv, 1.0);
    F.add_column(col);
  }
  F.add_column({{nv, 1.0}});
  std::vector<double> fb(nv + 1, 0.0);
  fb[nv] = 1.0;
  std::vector<double> fc = f.rhs;
  fc.push_back(0.0);
  RevisedSimplex farkas(F, fb, fc, config);
  StandardResult fr = farkas.run();
  sol.iterations += fr.iterations;
  if (fr.status != LPStatus::Optimal) throw NumericalFailure("feasibility check of the primal did not solve", kInf);
  double value = 0.0;
  for (std::size_t k = 0; k < fc.size(); ++k) value += fc[k] * fr.x[k];
  sol.status = value < -config.feasibility_tol * 100.0 ? LPStatus::Infeasible : LPStatus::Unbounded;
  return sol;
}

}  // namespace

LPSolution solve_lp(const LPModel& model, const LPConfig& config) {
  if (model.num_variables() == 0) {
    LPSolution sol;
    sol.status = LPStatus::Optimal;
    for (const auto& row : model.rows()) {
      const bool ok = (row.relation == Relation::LessEqual && 0.0 <= row.rhs + config.feasibility_tol) ||
                      (row.relation == Relation::GreaterEqual && 0.0 >= row.rhs - config.feasibility_tol) ||
                      (row.relation == Relation::Equal && std::abs(row.rhs) <= config.feasibility_tol);
      if (!ok) sol.status = LPStatus::Infeasible;
    }
    sol.objective = model.objective_constant();
    sol.duals.assign(model.num_constraints(), 0.0);
    return sol;
  }
  LPRoute route = config.route;
  if (route == LPRoute::Automatic) {
    std::size_t primal_rows = model.num_constraints();
    for (const auto& v : model.variables())
      if (std::isfinite(v.lower) && std::isfinite(v.upper)) ++primal_rows;
    route = model.num_variables() < primal_rows ? LPRoute::Dual : LPRoute::Primal;
  }
  return route == LPRoute::Dual ? solve_dual_route(model, config) : solve_primal_route(model, config);
}

double dual_objective(const LPModel& model, const LPSolution& solution) {
  const std::vector<double> c = min_sense_costs(model);
  std::vector<double> r = c;
  double g = 0.0;
  for (std::size_t i = 0; i < model.num_constraints(); ++i) {
    const auto& row = model.rows()[i];
    const double y = solution.duals[i];
    g += y * row.rhs;
    for (const auto& [j, a] : row.terms) r[j] -= y * a;
  }
  const auto& vars = model.variables();
  for (std::size_t j = 0; j < vars.size(); ++j) {
    if (r[j] > 0.0 && std::isfinite(vars[j].lower))
      g += r[j] * vars[j].lower;
    else if (r[j] < 0.0 && std::isfinite(vars[j].upper))
      g += r[j] * vars[j].upper;
  }
  const double s = model.sense() == Sense::Maximize ? -1.0 : 1.0;
  return s * g + model.objective_constant();
}

double dual_infeasibility(const LPModel& model, const LPSolution& solution) {
  const std::vector<double> c = min_sense_costs(model);
  std::vector<double> r = c;
  double worst = 0.0;
  for (std::size_t i = 0; i < model.num_constraints(); ++i) {
    const auto& row = model.rows()[i];
    const double y = solution.duals[i];
    if (row.relation == Relation::LessEqual) worst = std::max(worst, y);
    if (row.relation == Relation::GreaterEqual) worst = std::max(worst, -y);
    for (const auto& [j, a] : row.terms) r[j] -= y * a;
  }
  const auto& vars = model.variables();
  for (std::size_t j = 0; j < vars.size(); ++j) {
    if (r[j] > 0.0 && !std::isfinite(vars[j].lower)) worst = std::max(worst, r[j]);
    if (r[j] < 0.0 && !std::isfinite(vars[j].upper)) worst = std::max(worst, -r[j]);
  }
  return worst;
}

namespace {

std::string lp_name(const std::string& name, char prefix, std::size_t index) {
  std::string out;
  for (char ch : name) {
    const bool ok = std::isalnum(static_cast<unsigned char>(ch)) || std::string_view("!\"#$%&()/,.;?@_`'{}|~").find(ch) != std::string_view::npos;
    out.push_back(ok ? ch : '_');
  }
  if (out.empty() || std::isdigit(static_cast<unsigned char>(out[0])) || out[0] == '.')
    out = std::string(1, prefix) + std::to_string(index) + (out.empty() ? "" : "_" + out);
  return out;
}

void write_terms(std::ostream& os, const LPTerms& terms, const std::vector<std::string>& names) {
  if (terms.empty()) {
    os << " 0 " << names.front();
    return;
  }
  std::size_t count = 0;
  for (const auto& [j, a] : terms) {
    os << (a < 0.0 ? " - " : " + ") << std::abs(a) << ' ' << names[j];
    if (++count % 8 == 0) os << "\n   ";
  }
}

}  // namespace

void write_lp_file(const LPModel& model, std::ostream& os) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < model.num_variables(); ++j) names.push_back(lp_name(model.variables()[j].name, 'x', j));
  if (names.empty()) names.push_back("x0");
  const auto old_precision = os.precision(17);
  os << (model.sense() == Sense::Minimize ? "Minimize\n" : "Maximize\n") << " obj:";
  write_terms(os, model.objective(), names);
  if (model.objective_constant() != 0.0) os << (model.objective_constant() < 0 ? " - " : " + ") << std::abs(model.objective_constant());
  os << "\nSubject To\n";
  for (std::size_t i = 0; i < model.num_constraints(); ++i) {
    const auto& row = model.rows()[i];
    os << ' ' << lp_name(row.name, 'c', i) << ':';
    write_terms(os, row.terms, names);
    switch (row.relation) {
      case Relation::LessEqual: os << " <= "; break;
      case Relation::GreaterEqual: os << " >= "; break;
      case Relation::Equal: os << " = "; break;
    }
    os << row.rhs << '\n';
  }
  os << "Bounds\n";
  for (std::size_t j = 0; j < model.num_variables(); ++j) {
    const auto& v = model.variables()[j];
    if (!std::isfinite(v.lower) && !std::isfinite(v.upper)) {
      os << ' ' << names[j] << " free\n";
      continue;
    }
    if (v.lower == 0.0 && !std::isfinite(v.upper)) continue;
    os << ' ';
    if (std::isfinite(v.lower))
      os << v.lower;
    else
      os << "-inf";
    os << " <= " << names[j];
    if (std::isfinite(v.upper)) os << " <= " << v.upper;
    os << '\n';
  }
  os << "End\n";
  os.precision(old_precision);
}

std::string default_adapter_script() { return RWB_ADAPTER_SCRIPT; }

LPSolution solve_lp_external(const LPModel& model, const std::string& adapter_script) {
  namespace fs = std::filesystem;
  const std::string script = adapter_script.empty() ? default_adapter_script() : adapter_script;
  if (script.empty() || !fs::exists(script)) throw AdapterUnavailable("LP adapter script not found: " + script);
  if (std::system("python3 -c \"import scipy.optimize\" >/dev/null 2>&1") != 0)
    throw AdapterUnavailable("python3 with scipy is not available");

  nlohmann::json j;
  j["sense"] = model.sense() == Sense::Minimize ? "min" : "max";
  j["objective_constant"] = model.objective_constant();
  auto& c = j["objective"] = nlohmann::json::array();
  for (const auto& [k, a] : model.objective()) c.push_back({k, a});
  auto& vs = j["variables"] = nlohmann::json::array();
  for (const auto& v : model.variables())
    vs.push_back({{"lower", std::isfinite(v.lower) ? nlohmann::json(v.lower) : nlohmann::json(nullptr)},
                  {"upper", std::isfinite(v.upper) ? nlohmann::json(v.upper) : nlohmann::json(nullptr)}});
  auto& rs = j["rows"] = nlohmann::json::array();
  for (const auto& row : model.rows()) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& [k, a] : row.terms) terms.push_back({k, a});
    const char* rel = row.relation == Relation::LessEqual ? "<=" : row.relation == Relation::Equal ? "=" : ">=";
    rs.push_back({{"terms", terms}, {"relation", rel}, {"rhs", row.rhs}});
  }

  static std::atomic<int> counter = 0;
  const fs::path dir = fs::temp_directory_path();
  const std::string stem = "rwb_lp_" + std::to_string(::getpid()) + "_" + std::to_string(counter++);
  const fs::path in = dir / (stem + "_in.json");
  const fs::path out = dir / (stem + "_out.json");
  const fs::path err = dir / (stem + "_err.txt");
  {
    std::ofstream f(in);
    if (!f) throw IoError("cannot write " + in.string());
    f << j.dump();
  }
  const std::string cmd = "python3 \"" + script + "\" \"" + in.string() + "\" \"" + out.string() + "\" >/dev/null 2>\"" + err.string() + "\"";
  const int rc = std::system(cmd.c_str());
  fs::remove(in);
  if (rc != 0 || !fs::exists(out)) {
    std::string message;
    {
      std::ifstream f(err);
      for (std::string line; std::getline(f, line);)
        if (!line.empty()) message = line;
    }
    fs::remove(out);
    fs::remove(err);
    throw AdapterUnavailable("LP adapter failed with exit status " + std::to_string(rc) +
                             (message.empty() ? "" : ": " + message));
  }
  fs::remove(err);
  nlohmann::json r;
  {
    std::ifstream f(out);
    f >> r;
  }
  fs::remove(out);
  LPSolution sol;
  const std::string status = r.at("status");
  if (status == "optimal") {
    sol.status = LPStatus::Optimal;
    sol.values = r.at("x").get<std::vector<double>>();
    sol.duals = r.at("duals").get<std::vector<double>>();
    return finish(model, std::move(sol));
  }
  sol.status = status == "unbounded" ? LPStatus::Unbounded : LPStatus::Infeasible;
  return sol;
}

}  // namespace rwb
