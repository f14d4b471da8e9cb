#include "rwb/measure.hpp"

#include <cmath>

#include "rwb/errors.hpp"

namespace rwb {

namespace {

// tail(a) = sum_{n>=a} n rho^n in closed form; the difference tail(L) - tail(U+1)
// is an exact identity for any rho != 1.
double moment_tail(double rho, double a) {
  const double q = 1.0 - rho;
  return std::pow(rho, a) * (a * q + rho) / (q * q);
}

}  // namespace

GeometricSums geometric_sums(double rho, std::int64_t lower, std::int64_t upper) {
  if (upper == kUnbounded) {
    const double L = static_cast<double>(lower);
    return {std::pow(rho, L) / (1.0 - rho), moment_tail(rho, L)};
  }
  // Short ranges are summed directly; this also covers rho = 1.
  if (upper - lower <= 64 || rho == 1.0) {
    if (rho == 1.0) {
      const double cnt = static_cast<double>(upper - lower + 1);
      return {cnt, 0.5 * static_cast<double>(lower + upper) * cnt};
    }
    double s0 = 0.0, s1 = 0.0;
    double p = std::pow(rho, static_cast<double>(lower));
    for (std::int64_t n = lower; n <= upper; ++n) {
      s0 += p;
      s1 += static_cast<double>(n) * p;
      p *= rho;
    }
    return {s0, s1};
  }
  const double L = static_cast<double>(lower);
  const double U1 = static_cast<double>(upper + 1);
  return {(std::pow(rho, L) - std::pow(rho, U1)) / (1.0 - rho), moment_tail(rho, L) - moment_tail(rho, U1)};
}

GeometricStationaryMeasure::GeometricStationaryMeasure(std::vector<double> weights,
                                                       std::vector<std::vector<double>> ratios,
                                                       double c_norm)
    : weights_(std::move(weights)), ratios_(std::move(ratios)), c_norm_(c_norm) {
  if (weights_.size() != ratios_.size()) throw ModelError("measure weights and ratios differ in length");
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    if (!(weights_[k] > 0.0)) throw ModelError("measure weight of component " + std::to_string(k) + " must be > 0");
    for (double r : ratios_[k])
      if (!(r > 0.0)) throw ModelError("measure ratio of component " + std::to_string(k) + " must be > 0");
  }
}

ComponentMoments GeometricStationaryMeasure::component_moments(const Partition& partition, std::size_t k) const {
  const auto& box = partition.box(k);
  const std::size_t dim = partition.dim();
  if (ratios_.size() != partition.size() || ratios_[k].size() != dim)
    throw ModelError("measure does not match the partition");
  std::vector<GeometricSums> sums(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    const double rho = ratios_[k][i];
    if (!box.bounded(i) && !(rho < 1.0)) throw DivergentMass(k, i, rho);
    sums[i] = geometric_sums(rho, box.lower[i], box.upper[i]);
  }
  const double scale = c_norm_ * weights_[k];
  ComponentMoments out;
  out.mass = scale;
  for (const auto& s : sums) out.mass *= s.s0;
  out.first.assign(dim, scale);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t l = 0; l < dim; ++l) out.first[i] *= (l == i ? sums[l].s1 : sums[l].s0);
  return out;
}

double GeometricStationaryMeasure::point_mass(const Partition& partition, std::span<const std::int64_t> n) const {
  const std::size_t k = partition.locate(n);
  double v = c_norm_ * weights_[k];
  for (std::size_t i = 0; i < n.size(); ++i) v *= std::pow(ratios_[k][i], static_cast<double>(n[i]));
  return v;
}

ComponentMoments component_moments(const StationaryMeasure& m, const Partition& partition, std::size_t k) {
  return m.component_moments(partition, k);
}

GeometricStationaryMeasure normalize(const GeometricStationaryMeasure& m, const Partition& partition) {
  GeometricStationaryMeasure out = m;
  out.c_norm_ = 1.0;
  double total = 0.0;
  for (std::size_t k = 0; k < partition.size(); ++k) total += out.component_moments(partition, k).mass;
  out.c_norm_ = 1.0 / total;
  return out;
}

double point_mass(const StationaryMeasure& m, const Partition& partition, std::span<const std::int64_t> n) {
  return m.point_mass(partition, n);
}

double verify_balance(const StationaryMeasure& m, const RandomWalkSpec& walk, const std::vector<State>& test_states) {
  const std::size_t dim = walk.partition.dim();
  const auto steps = unit_steps(dim);
  double worst = 0.0;
  State src(dim);
  for (const auto& n : test_states) {
    double inflow = 0.0;
    for (const auto& u : steps) {
      bool inside = true;
      for (std::size_t i = 0; i < dim; ++i) {
        src[i] = n[i] - u[i];
        if (src[i] < 0) inside = false;
      }
      if (!inside) continue;
      inflow += m.point_mass(walk.partition, src) * transition_prob(walk, src, u);
    }
    worst = std::max(worst, std::abs(m.point_mass(walk.partition, n) - inflow));
  }
  return worst;
}

std::vector<State> grid_states(std::span<const std::int64_t> caps) {
  std::vector<State> out;
  State n(caps.size(), 0);
  while (true) {
    out.push_back(n);
    std::size_t i = 0;
    while (i < n.size() && n[i] == caps[i]) n[i++] = 0;
    if (i == n.size()) break;
    ++n[i];
  }
  return out;
}

}  // namespace rwb
