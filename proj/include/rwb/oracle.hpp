#pragma once

// Finite truncations of a random walk used as ground truth: stationary
// distributions, exact performance values and the reward recursion.

#include <cstdint>
#include <span>
#include <vector>

#include "rwb/bounds.hpp"
#include "rwb/flow.hpp"
#include "rwb/linfunc.hpp"
#include "rwb/measure.hpp"
#include "rwb/walk.hpp"

namespace rwb {

/// The walk restricted to [0, cap_1] x ... x [0, cap_M]. Steps that would leave
/// the box are folded into the self-loop. Rows are stored in CSR form with
/// states numbered dimension 1 fastest.
class TruncatedChain {
 public:
  TruncatedChain() = default;
  TruncatedChain(const RandomWalkSpec& walk, std::vector<std::int64_t> caps);

  std::size_t size() const { return row_ptr_.empty() ? 0 : row_ptr_.size() - 1; }
  std::size_t dim() const { return caps_.size(); }
  const std::vector<std::int64_t>& caps() const { return caps_; }
  const Partition& partition() const { return partition_; }

  State state(std::size_t index) const;
  /// Index of n, or kNone when n lies outside the box.
  std::size_t index(std::span<const std::int64_t> n) const;

  const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
  const std::vector<std::size_t>& cols() const { return cols_; }
  const std::vector<double>& values() const { return values_; }
  double probability(std::size_t from, std::size_t to) const;

  /// y = P x, parallel over rows.
  void apply(std::span<const double> x, std::span<double> y) const;
  /// Single-threaded reference for apply.
  void apply_serial(std::span<const double> x, std::span<double> y) const;

  /// max over rows of |sum_m P(n, m) - 1|.
  double row_sum_deviation() const;

 private:
  std::vector<std::int64_t> caps_;
  std::vector<std::size_t> strides_;
  Partition partition_;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::size_t> cols_;
  std::vector<double> values_;
};

/// Closed strongly connected classes of the positive-transition graph.
std::vector<std::vector<std::size_t>> closed_classes(const TruncatedChain& chain);

struct StationaryResult {
  std::vector<double> pi;
  std::vector<std::size_t> support;  // states of the absorbing class
  double residual = 0.0;             // max_m |(pi P)(m) - pi(m)|
};

/// Stationary distribution on the unique absorbing class, zero on transient
/// states. Throws MultipleAbsorbingClasses.
StationaryResult stationary_exact(const TruncatedChain& chain);

/// max_m |(pi P)(m) - pi(m)|.
double stationary_residual(const TruncatedChain& chain, std::span<const double> pi);

/// Reward vector F(n) on the chain states.
std::vector<double> reward_vector(const TruncatedChain& chain, const CLinearFn& f);

double exact_performance(const TruncatedChain& chain, std::span<const double> pi, const CLinearFn& f);

/// F^0 = 0 and F^{t+1} = F + P F^t for t < horizon.
class RewardTrace {
 public:
  RewardTrace() = default;
  RewardTrace(std::vector<double> reward, std::vector<std::vector<double>> values)
      : reward_(std::move(reward)), values_(std::move(values)) {}

  std::size_t horizon() const { return values_.empty() ? 0 : values_.size() - 1; }
  const std::vector<double>& reward() const { return reward_; }
  const std::vector<double>& at(std::size_t t) const { return values_[t]; }
  /// D^t(n, m) = F^t(m) - F^t(n) by state index.
  double bias(std::size_t t, std::size_t n, std::size_t m) const { return values_[t][m] - values_[t][n]; }

 private:
  std::vector<double> reward_;
  std::vector<std::vector<double>> values_;
};

RewardTrace iterate_rewards(const TruncatedChain& chain, std::span<const double> reward, std::size_t horizon);
RewardTrace iterate_rewards_serial(const TruncatedChain& chain, std::span<const double> reward,
                                   std::size_t horizon);
RewardTrace iterate_rewards(const TruncatedChain& chain, const CLinearFn& f, std::size_t horizon);

/// Smallest uniform cap whose box holds all but at most `tail` of the measure.
std::int64_t cap_for_tail(const StationaryMeasure& measure, const Partition& partition, double tail,
                          std::int64_t max_cap = 400);

/// Mass of the normalized measure outside the box of the given caps.
double measure_tail(const StationaryMeasure& measure, const Partition& partition,
                    std::span<const std::int64_t> caps);

/// The states whose flow window (offsets up to 2 plus one more step) stays
/// inside the box, so chain rows there are rows of the infinite walk.
bool interior(const TruncatedChain& chain, std::span<const std::int64_t> n, std::int64_t margin = 3);

struct FlowIdentityPoint {
  State n;
  Step u;
};

/// One interior point per refinement cell, with every admissible unit step.
std::vector<FlowIdentityPoint> interior_identity_points(const TruncatedChain& chain, const Refinement& refinement);

/// max over points and t < horizon of |D^{t+1}(n, n+u) - F(n+u) + F(n) -
/// sum phi(n,u,m,v) D^t(m, m+v)|. Points must be interior.
double check_flow_identity(const FlowSolution& flows, const Refinement& refinement, const TruncatedChain& chain,
                           const RewardTrace& trace, std::span<const FlowIdentityPoint> points);

struct RewardInequalityReport {
  /// max over t of |pibar . (Fbar^t - F^t)| - t pibar . G
  double aggregate = 0.0;
  /// max over sampled states and t of |Fbar - F + sum (Pbar - P) D^t| - G
  double pointwise = 0.0;
};

/// Runs both recursions up to the horizon on the truncated original and
/// perturbed chains and checks the error-bound inequality.
RewardInequalityReport check_reward_inequality(const TruncatedChain& original, const TruncatedChain& perturbed,
                                               std::span<const double> pibar, const CLinearFn& f,
                                               const CLinearFn& fbar, const CLinearFn& g, std::size_t horizon);

}  // namespace rwb
