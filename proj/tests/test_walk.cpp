#include <cmath>
#include <random>

#include "doctest.h"
#include "rwb/errors.hpp"
#include "rwb/walk.hpp"
#include "support.hpp"

using namespace rwb;
using namespace rwb::testing;

TEST_SUITE("walk") {
  TEST_CASE("queue law validates") {
    const RandomWalkSpec w = queue_walk();
    CHECK(w.law.get(1, Step{-1}) == doctest::Approx(0.5));
    CHECK(w.law.get(0, Step{0}) == doctest::Approx(0.7));
  }

  TEST_CASE("a step leaving the orthant is illegal") {
    const Partition p = validate_partition({box({0}, {0}), box({1}, {kInfty})}, 1);
    const TransitionLaw law =
        make_law({{{{1}, 0.3}, {{-1}, 0.1}, {{0}, 0.6}}, {{{1}, 0.3}, {{-1}, 0.5}, {{0}, 0.2}}}, 1);
    CHECK_THROWS_AS(validate_walk(p, law), IllegalStep);
  }

  TEST_CASE("row sum deviation is reported") {
    const Partition p = validate_partition({box({0}, {0}), box({1}, {kInfty})}, 1);
    const TransitionLaw law = make_law({{{{1}, 0.3}, {{0}, 0.7}}, {{{1}, 0.3}, {{-1}, 0.5}, {{0}, 0.15}}}, 1);
    try {
      validate_walk(p, law);
      FAIL("expected RowSumError");
    } catch (const RowSumError& e) {
      CHECK(e.component == 1);
      CHECK(e.deviation == doctest::Approx(0.05));
    }
  }

  TEST_CASE("uniformization divides by the constant") {
    const TransitionLaw law = uniformize({{{{1}, 0.2}, {{-1}, 0.3}}}, 1.0, 1);
    CHECK(law.get(0, Step{1}) == doctest::Approx(0.2));
    CHECK(law.get(0, Step{-1}) == doctest::Approx(0.3));
    CHECK(law.get(0, Step{0}) == doctest::Approx(0.5));
    CHECK_THROWS_AS(uniformize({{{{1}, 0.6}, {{-1}, 0.6}}}, 1.0, 1), RateOverflow);
  }

  TEST_CASE("uniformization is invariant under common rescaling") {
    const std::vector<StepMap> rates = {{{{1, 0}, 0.1}, {{-1, 1}, 0.25}, {{0, -1}, 0.3}}};
    const double s = 4.0;
    std::vector<StepMap> scaled = rates;
    for (auto& row : scaled)
      for (auto& [u, r] : row) r *= s;
    CHECK(uniformize(rates, 1.0, 2) == uniformize(scaled, s, 2));
  }

  TEST_CASE("tandem interior self-loop") {
    const ModelInstance inst = load_instance("tandem2d");
    const auto& v = inst.values;
    const std::size_t k = component_index(inst, "b1");
    CHECK(inst.original.law.get(k, Step{0, 0}) ==
          doctest::Approx(1.0 - v.at("lambda") - v.at("mu1") - v.at("mu2")).epsilon(1e-12));
  }

  TEST_CASE("pointwise transition probabilities") {
    const RandomWalkSpec w = queue_walk();
    CHECK(transition_prob(w, State{5}, Step{-1}) == doctest::Approx(0.5));
    CHECK(transition_prob(w, State{0}, Step{-1}) == 0.0);
    const ModelInstance inst = load_instance("tandem2d");
    const auto T = static_cast<std::int64_t>(inst.values.at("T"));
    CHECK(transition_prob(inst.original, State{T + 1, 3}, Step{-1, 1}) == doctest::Approx(inst.values.at("mu1s")));
  }

  TEST_CASE("probabilities sum to one at random states") {
    const ModelInstance inst = load_instance("coupled3d");
    std::mt19937 rng(3);
    std::uniform_int_distribution<std::int64_t> coord(0, 6);
    for (int t = 0; t < 100; ++t) {
      const State n{coord(rng), coord(rng), coord(rng)};
      double sum = 0.0;
      for (const auto& u : unit_steps(3)) sum += transition_prob(inst.original, n, u);
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  TEST_CASE("delta of identical walks vanishes") {
    const RandomWalkSpec w = queue_walk();
    CHECK(delta(w, w).is_zero());
  }

  TEST_CASE("blocking difference on the tandem boundary") {
    const ModelInstance inst = load_instance("tandem2d");
    const PerturbationDelta d = delta(inst.original, inst.perturbed);
    const std::size_t k = component_index(inst, "b2");
    CHECK(d.get(k, Step{-1, 1}) == doctest::Approx(inst.values.at("mu1")));
    CHECK(d.get(k, Step{0, 0}) == doctest::Approx(-inst.values.at("mu1")));
  }

  TEST_CASE("service change next to the coupled origin") {
    const ModelInstance inst = load_instance("coupled3d");
    const PerturbationDelta d = delta(inst.original, inst.perturbed);
    const std::size_t k = component_index(inst, "z100");
    CHECK(d.get(k, Step{-1, 0, 0}) == doctest::Approx(inst.values.at("mu") - inst.values.at("mus")));
  }

  TEST_CASE("delta rows sum to zero and flip sign with the arguments") {
    const ModelInstance inst = load_instance("tandem3d");
    const PerturbationDelta ab = delta(inst.original, inst.perturbed);
    const PerturbationDelta ba = delta(inst.perturbed, inst.original);
    for (std::size_t k = 0; k < ab.components(); ++k) {
      double sum = 0.0;
      for (const auto& u : unit_steps(3)) {
        sum += ab.get(k, u);
        CHECK(ab.get(k, u) == -ba.get(k, u));
      }
      CHECK(std::abs(sum) <= 1e-12);
    }
  }

  TEST_CASE("delta needs a shared partition") {
    const RandomWalkSpec w = queue_walk();
    const Partition other = validate_partition({box({0}, {0}), box({1}, {3}), box({4}, {kInfty})}, 1);
    const StepMap inner = {{{1}, 0.3}, {{-1}, 0.5}, {{0}, 0.2}};
    const RandomWalkSpec v = validate_walk(other, make_law({{{{1}, 0.3}, {{0}, 0.7}}, inner, inner}, 1));
    CHECK_THROWS_AS(delta(w, v), PartitionMismatch);
  }
}
