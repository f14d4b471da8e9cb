#pragma once

// Explicit stationary measures of the perturbed walk.

#include <span>
#include <vector>

#include "rwb/lattice.hpp"
#include "rwb/walk.hpp"

namespace rwb {

struct ComponentMoments {
  double mass = 0.0;               // sum over C_k of pi(n)
  std::vector<double> first;       // sum over C_k of n_i pi(n), i = 1..M
};

/// Anything that can report per-component masses and first moments and point
/// values can drive the bound LP objective.
class StationaryMeasure {
 public:
  virtual ~StationaryMeasure() = default;
  virtual ComponentMoments component_moments(const Partition& partition, std::size_t k) const = 0;
  virtual double point_mass(const Partition& partition, std::span<const std::int64_t> n) const = 0;
};

/// pi(n) = c_norm * w_{c(n)} * prod_i rho_{c(n),i}^{n_i}.
class GeometricStationaryMeasure final : public StationaryMeasure {
 public:
  GeometricStationaryMeasure() = default;
  GeometricStationaryMeasure(std::vector<double> weights, std::vector<std::vector<double>> ratios,
                             double c_norm = 1.0);

  const std::vector<double>& weights() const { return weights_; }
  const std::vector<std::vector<double>>& ratios() const { return ratios_; }
  double c_norm() const { return c_norm_; }

  /// Throws DivergentMass when rho >= 1 along an unbounded dimension.
  ComponentMoments component_moments(const Partition& partition, std::size_t k) const override;
  double point_mass(const Partition& partition, std::span<const std::int64_t> n) const override;

 private:
  friend GeometricStationaryMeasure normalize(const GeometricStationaryMeasure&, const Partition&);

  std::vector<double> weights_;
  std::vector<std::vector<double>> ratios_;
  double c_norm_ = 1.0;
};

ComponentMoments component_moments(const StationaryMeasure& m, const Partition& partition, std::size_t k);

/// Returns a copy with c_norm = 1 / total unnormalized mass.
GeometricStationaryMeasure normalize(const GeometricStationaryMeasure& m, const Partition& partition);

/// max over the test states of |pi(n) - sum_u pi(n-u) P(n-u, n)|.
double verify_balance(const StationaryMeasure& m, const RandomWalkSpec& walk,
                      const std::vector<State>& test_states);

double point_mass(const StationaryMeasure& m, const Partition& partition, std::span<const std::int64_t> n);

/// All states of the box [0, cap_1] x ... x [0, cap_M].
std::vector<State> grid_states(std::span<const std::int64_t> caps);

/// Per-dimension sums sum_{n=L}^{U} rho^n and sum_{n=L}^{U} n rho^n (U may be unbounded).
struct GeometricSums {
  double s0;
  double s1;
};
GeometricSums geometric_sums(double rho, std::int64_t lower, std::int64_t upper);

}  // namespace rwb
