#include "rwb/walk.hpp"

#include <cmath>
#include <string>

#include "rwb/errors.hpp"

namespace rwb {

TransitionLaw::TransitionLaw(std::size_t components, std::size_t dim)
    : dim_(dim), table_(components, std::vector<double>(offset_space(dim), 0.0)) {}

double TransitionLaw::get(std::size_t k, std::span<const int> u) const {
  for (int x : u)
    if (x < -1 || x > 1) return 0.0;
  return table_[k][offset_code(u)];
}

void TransitionLaw::set(std::size_t k, std::span<const int> u, double p) {
  if (u.size() != dim_) throw ModelError("step " + format_vector(Step(u.begin(), u.end())) + " has the wrong dimension");
  for (int x : u)
    if (x < -1 || x > 1) throw IllegalStep(k, Step(u.begin(), u.end()));
  table_[k][offset_code(u)] = p;
}

TransitionLaw make_law(const std::vector<StepMap>& rows, std::size_t dim) {
  TransitionLaw law(rows.size(), dim);
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (const auto& [u, p] : rows[k]) law.set(k, u, p);
  return law;
}

RandomWalkSpec validate_walk(const Partition& partition, const TransitionLaw& law) {
  if (law.components() != partition.size())
    throw ModelError("transition law has " + std::to_string(law.components()) +
                     " components, partition has " + std::to_string(partition.size()));
  if (law.dim() != partition.dim()) throw ModelError("transition law dimension mismatch");
  const auto steps = unit_steps(partition.dim());
  for (std::size_t k = 0; k < partition.size(); ++k) {
    double sum = 0.0;
    for (const auto& u : steps) {
      double p = law.get(k, u);
      if (p == 0.0) continue;
      if (!partition.allows(k, u)) throw IllegalStep(k, u);
      if (!(p >= 0.0 && p <= 1.0)) throw InvalidProbability(k, u, p);
      sum += p;
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance) throw RowSumError(k, std::abs(sum - 1.0));
  }
  return RandomWalkSpec{partition, law};
}

TransitionLaw uniformize(const std::vector<StepMap>& rates, double constant, std::size_t dim) {
  if (!(constant > 0.0)) throw ModelError("uniformization constant must be positive");
  TransitionLaw law(rates.size(), dim);
  const Step zero(dim, 0);
  for (std::size_t k = 0; k < rates.size(); ++k) {
    double total_rate = 0.0;
    double total_p = 0.0;
    for (const auto& [u, r] : rates[k]) {
      if (is_zero(u)) continue;
      if (r < 0.0) throw InvalidProbability(k, u, r);
      total_rate += r;
      double p = r / constant;
      law.set(k, u, p);
      total_p += p;
    }
    if (total_rate > constant) throw RateOverflow(k, total_rate, constant);
    law.set(k, zero, std::max(0.0, 1.0 - total_p));
  }
  return law;
}

double transition_prob(const RandomWalkSpec& spec, std::span<const std::int64_t> n, std::span<const int> u) {
  std::size_t k = spec.partition.locate(n);
  if (!spec.partition.allows(k, u)) return 0.0;
  return spec.law.get(k, u);
}

bool PerturbationDelta::is_zero() const {
  for (std::size_t k = 0; k < diff_.components(); ++k)
    for (double x : diff_.row(k))
      if (x != 0.0) return false;
  return true;
}

PerturbationDelta delta(const RandomWalkSpec& original, const RandomWalkSpec& perturbed) {
  if (!(original.partition == perturbed.partition))
    throw PartitionMismatch("original and perturbed walks must share one partition");
  const std::size_t dim = original.partition.dim();
  TransitionLaw diff(original.partition.size(), dim);
  for (std::size_t k = 0; k < original.partition.size(); ++k)
    for (const auto& u : original.partition.steps(k))
      diff.set(k, u, perturbed.law.get(k, u) - original.law.get(k, u));
  return PerturbationDelta(std::move(diff));
}

}  // namespace rwb
