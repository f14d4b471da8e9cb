#include <cmath>

#include "doctest.h"
#include "rwb/errors.hpp"
#include "rwb/measure.hpp"
#include "support.hpp"

using namespace rwb;
using namespace rwb::testing;

namespace {

/// Direct summation over the box, truncating unbounded dimensions where the
/// remaining geometric tail is below 1e-16.
ComponentMoments brute_moments(const GeometricStationaryMeasure& m, const Partition& p, std::size_t k) {
  const LatticeBox& b = p.box(k);
  const std::size_t dim = b.dim();
  std::vector<std::int64_t> hi(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    if (b.bounded(i)) {
      hi[i] = b.upper[i];
    } else {
      const double rho = m.ratios()[k][i];
      hi[i] = b.lower[i] + static_cast<std::int64_t>(std::ceil(std::log(1e-16) / std::log(rho)));
    }
  }
  ComponentMoments out;
  out.first.assign(dim, 0.0);
  State n = b.lower;
  while (true) {
    const double v = m.point_mass(p, n);
    out.mass += v;
    for (std::size_t i = 0; i < dim; ++i) out.first[i] += static_cast<double>(n[i]) * v;
    std::size_t i = 0;
    for (; i < dim; ++i) {
      if (n[i] < hi[i]) {
        ++n[i];
        break;
      }
      n[i] = b.lower[i];
    }
    if (i == dim) break;
  }
  return out;
}

}  // namespace

TEST_SUITE("measure") {
  TEST_CASE("finite component moments match direct summation") {
    const Partition p = example_partition();
    const GeometricStationaryMeasure m(std::vector<double>(6, 1.0), std::vector<std::vector<double>>(6, {0.5, 0.7}));
    double mass = 0.0, first = 0.0;
    for (std::int64_t n = 1; n <= 4; ++n) {
      mass += std::pow(0.5, n);
      first += n * std::pow(0.5, n);
    }
    const ComponentMoments c = m.component_moments(p, 1);
    CHECK(c.mass == doctest::Approx(mass).epsilon(1e-15));
    CHECK(c.mass == doctest::Approx(0.9375));
    CHECK(c.first[0] == doctest::Approx(first).epsilon(1e-15));
    CHECK(c.first[0] == doctest::Approx(1.625));
    CHECK(c.first[1] == 0.0);
  }

  TEST_CASE("origin component holds a single state") {
    const Partition p = example_partition();
    const GeometricStationaryMeasure m(std::vector<double>(6, 1.0), std::vector<std::vector<double>>(6, {0.5, 0.7}));
    const ComponentMoments c = m.component_moments(p, 0);
    CHECK(c.mass == 1.0);
    CHECK(c.first == std::vector<double>{0.0, 0.0});
  }

  TEST_CASE("divergent mass is reported") {
    const Partition p = example_partition();
    const GeometricStationaryMeasure m(std::vector<double>(6, 1.0), std::vector<std::vector<double>>(6, {1.0, 0.5}));
    CHECK_THROWS_AS(m.component_moments(p, 2), DivergentMass);
    CHECK_NOTHROW(m.component_moments(p, 1));
  }

  TEST_CASE("geometric sums") {
    const GeometricSums s = geometric_sums(1.0, 2, 5);
    CHECK(s.s0 == 4.0);
    CHECK(s.s1 == 14.0);
    double tail = 0.0;
    for (int n = 5; n < 1000; ++n) tail += std::pow(0.5, n);
    CHECK(geometric_sums(0.5, 5, kUnbounded).s0 == doctest::Approx(tail).epsilon(1e-14));
    CHECK(geometric_sums(0.5, 5, kUnbounded).s0 == doctest::Approx(0.0625));
  }

  TEST_CASE("tandem normalization matches the closed form") {
    const ModelInstance inst = load_instance("tandem2d");
    const auto* m = dynamic_cast<const GeometricStationaryMeasure*>(inst.measure.get());
    REQUIRE(m != nullptr);
    const double r1 = 0.5, r2 = 1.0 / 3.0, s = 1.0 / 3.0;
    const int T = 4;
    const double inv = (1.0 - std::pow(r1, T + 1)) / ((1.0 - r1) * (1.0 - s)) +
                       std::pow(r1, T) * r2 / ((1.0 - r2) * (1.0 - s));
    CHECK(m->c_norm() == doctest::Approx(1.0 / inv).epsilon(1e-12));
    const double c = 1.0 / inv;
    CHECK(m->point_mass(inst.partition, State{T + 1, 0}) ==
          doctest::Approx(c * std::pow(r1, T) * r2).epsilon(1e-12));
  }

  TEST_CASE("product form normalization") {
    const ModelInstance inst = load_instance("coupled3d");
    const auto* m = dynamic_cast<const GeometricStationaryMeasure*>(inst.measure.get());
    REQUIRE(m != nullptr);
    const double rho = inst.values.at("rho");
    CHECK(m->c_norm() == doctest::Approx(std::pow(1.0 - rho, 3)).epsilon(1e-12));
  }

  TEST_CASE("one-dimensional geometric measure") {
    const Partition p = validate_partition({box({0}, {0}), box({1}, {kInfty})}, 1);
    const GeometricStationaryMeasure m =
        normalize(GeometricStationaryMeasure({1.0, 1.0}, {{0.6}, {0.6}}), p);
    CHECK(m.c_norm() == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(m.point_mass(p, State{0}) == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(m.point_mass(p, State{2}) == doctest::Approx(0.144).epsilon(1e-14));
  }

  TEST_CASE("normalized masses sum to one and agree with brute force") {
    for (const char* name : {"example1", "tandem2d", "coupled3d", "tandem3d", "mm1", "mm1_origin"}) {
      const ModelInstance inst = load_instance(name);
      const auto* m = dynamic_cast<const GeometricStationaryMeasure*>(inst.measure.get());
      REQUIRE(m != nullptr);
      double total = 0.0;
      for (std::size_t k = 0; k < inst.partition.size(); ++k) {
        const ComponentMoments c = m->component_moments(inst.partition, k);
        const ComponentMoments b = brute_moments(*m, inst.partition, k);
        total += c.mass;
        CHECK(c.mass == doctest::Approx(b.mass).epsilon(1e-8));
        for (std::size_t i = 0; i < c.first.size(); ++i)
          CHECK(c.first[i] == doctest::Approx(b.first[i]).epsilon(1e-8));
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
    }
  }

  TEST_CASE("balance holds for the shipped perturbed walks") {
    const ModelInstance tandem = load_instance("tandem2d");
    CHECK(verify_balance(*tandem.measure, tandem.perturbed, grid_states(std::vector<std::int64_t>{12, 12})) <= 1e-10);
    const ModelInstance coupled = load_instance("coupled3d");
    CHECK(verify_balance(*coupled.measure, coupled.perturbed, grid_states(std::vector<std::int64_t>{8, 8, 8})) <=
          1e-10);
    const ModelInstance t3 = load_instance("tandem3d");
    CHECK(verify_balance(*t3.measure, t3.perturbed, grid_states(std::vector<std::int64_t>{8, 8, 8})) <= 1e-10);
  }

  TEST_CASE("a wrong ratio breaks balance") {
    const ModelInstance coupled = load_instance("coupled3d");
    const double rho = coupled.values.at("rho") + 0.1;
    const std::size_t K = coupled.partition.size();
    const GeometricStationaryMeasure wrong =
        normalize(GeometricStationaryMeasure(std::vector<double>(K, 1.0),
                                             std::vector<std::vector<double>>(K, {rho, rho, rho})),
                  coupled.partition);
    CHECK(verify_balance(wrong, coupled.perturbed, grid_states(std::vector<std::int64_t>{8, 8, 8})) > 1e-3);
  }
}
