#pragma once

// Homogeneous nearest-neighbor transition laws on a partition.

#include <map>
#include <span>
#include <vector>

#include "rwb/lattice.hpp"

namespace rwb {

/// Per-component step probabilities, stored densely by offset code. Entries for
/// steps outside N_k are zero; the self-loop is stored explicitly.
class TransitionLaw {
 public:
  TransitionLaw() = default;
  TransitionLaw(std::size_t components, std::size_t dim);

  std::size_t dim() const { return dim_; }
  std::size_t components() const { return table_.size(); }

  double get(std::size_t k, std::span<const int> u) const;
  double get_code(std::size_t k, std::size_t code) const { return table_[k][code]; }
  void set(std::size_t k, std::span<const int> u, double p);
  const std::vector<double>& row(std::size_t k) const { return table_[k]; }

  bool operator==(const TransitionLaw&) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<std::vector<double>> table_;
};

using StepMap = std::map<Step, double>;

/// Builds a law from explicit per-component maps (no validation).
TransitionLaw make_law(const std::vector<StepMap>& rows, std::size_t dim);

inline constexpr double kRowSumTolerance = 1e-12;

struct RandomWalkSpec {
  Partition partition;
  TransitionLaw law;
};

/// Throws IllegalStep, InvalidProbability or RowSumError.
RandomWalkSpec validate_walk(const Partition& partition, const TransitionLaw& law);

/// p_{k,u} = rate_{k,u} / constant, self-loop by complement. Throws RateOverflow.
TransitionLaw uniformize(const std::vector<StepMap>& rates, double constant, std::size_t dim);

/// P(n, n+u); zero when u is not admissible from n.
double transition_prob(const RandomWalkSpec& spec, std::span<const std::int64_t> n, std::span<const int> u);

/// Difference of two laws on one partition: Delta_{k,u} = pbar_{k,u} - p_{k,u}.
class PerturbationDelta {
 public:
  PerturbationDelta() = default;
  explicit PerturbationDelta(TransitionLaw diff) : diff_(std::move(diff)) {}

  double get(std::size_t k, std::span<const int> u) const { return diff_.get(k, u); }
  double get_code(std::size_t k, std::size_t code) const { return diff_.get_code(k, code); }
  std::size_t components() const { return diff_.components(); }
  bool is_zero() const;

 private:
  TransitionLaw diff_;
};

/// Throws PartitionMismatch unless both walks use the identical partition.
PerturbationDelta delta(const RandomWalkSpec& original, const RandomWalkSpec& perturbed);

}  // namespace rwb
