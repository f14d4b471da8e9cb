#include <cmath>
#include <numeric>

#include "doctest.h"
#include "rwb/oracle.hpp"
#include "support.hpp"

using namespace rwb;
using namespace rwb::testing;

namespace {

RandomWalkSpec one_dim_walk(const std::vector<StepMap>& rows) {
  const Partition p = validate_partition({box({0}, {0}), box({1}, {kInfty})}, 1);
  return validate_walk(p, make_law(rows, 1));
}

CLinearFn constant_fn(std::size_t components, std::size_t dim, double c) {
  CLinearFn f = CLinearFn::zero(components, dim);
  for (auto& row : f.coef) row[0] = c;
  return f;
}

CLinearFn queue_length(std::size_t components) {
  CLinearFn f = CLinearFn::zero(components, 1);
  for (auto& row : f.coef) row[1] = 1.0;
  return f;
}

std::vector<double> measure_on_chain(const ModelInstance& inst, const TruncatedChain& chain) {
  std::vector<double> pi(chain.size());
  for (std::size_t s = 0; s < chain.size(); ++s) pi[s] = point_mass(*inst.measure, inst.partition, chain.state(s));
  return pi;
}

}  // namespace

TEST_SUITE("oracle") {
  TEST_CASE("two-state chain") {
    const TruncatedChain chain(queue_walk(), {1});
    REQUIRE(chain.size() == 2);
    CHECK(chain.probability(0, 0) == doctest::Approx(0.7));
    CHECK(chain.probability(1, 1) == doctest::Approx(0.5));
    CHECK(chain.row_sum_deviation() <= 1e-15);
    const StationaryResult st = stationary_exact(chain);
    CHECK(st.pi[0] == doctest::Approx(0.625).epsilon(1e-12));
    CHECK(st.pi[1] == doctest::Approx(0.375).epsilon(1e-12));
    CHECK(st.residual <= 1e-14);
  }

  TEST_CASE("truncated single queue is geometric") {
    const TruncatedChain chain(queue_walk(), {60});
    const StationaryResult st = stationary_exact(chain);
    for (std::size_t n = 0; n <= 60; ++n) CHECK(std::abs(st.pi[n] - 0.4 * std::pow(0.6, n)) <= 1e-6);
    CHECK(exact_performance(chain, st.pi, queue_length(2)) == doctest::Approx(1.5).epsilon(1e-5));
    CHECK(stationary_residual(chain, st.pi) <= 1e-12);
  }

  TEST_CASE("reward recursion on constant rewards") {
    const TruncatedChain chain(queue_walk(), {20});
    const RewardTrace trace = iterate_rewards(chain, constant_fn(2, 1, 1.0), 30);
    CHECK(trace.horizon() == 30);
    for (std::size_t t = 0; t <= 30; ++t)
      for (double v : trace.at(t)) CHECK(v == doctest::Approx(static_cast<double>(t)).epsilon(1e-12));
    const StationaryResult st = stationary_exact(chain);
    CHECK(exact_performance(chain, st.pi, constant_fn(2, 1, 1.0)) == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("average reward converges to the stationary value") {
    const TruncatedChain chain(queue_walk(), {80});
    const RewardTrace trace = iterate_rewards(chain, queue_length(2), 2000);
    CHECK(std::abs(trace.at(2000)[0] / 2000.0 - 1.5) <= 0.02);
  }

  TEST_CASE("transient states get zero mass") {
    const RandomWalkSpec walk = one_dim_walk({{{{1}, 1.0}}, {{{1}, 0.3}, {{0}, 0.7}}});
    const TruncatedChain chain(walk, {3});
    const auto classes = closed_classes(chain);
    REQUIRE(classes.size() == 1);
    CHECK(classes[0] == std::vector<std::size_t>{3});
    const StationaryResult st = stationary_exact(chain);
    CHECK(st.pi == std::vector<double>{0.0, 0.0, 0.0, 1.0});
  }

  TEST_CASE("several absorbing classes are rejected") {
    const RandomWalkSpec walk = one_dim_walk({{{{0}, 1.0}}, {{{0}, 1.0}}});
    const TruncatedChain chain(walk, {2});
    CHECK(closed_classes(chain).size() == 3);
    CHECK_THROWS_AS(stationary_exact(chain), MultipleAbsorbingClasses);
  }

  TEST_CASE("states outside the box have no index") {
    const ModelInstance inst = load_instance("tandem2d");
    const TruncatedChain chain(inst.original, {4, 5});
    CHECK(chain.size() == 30);
    CHECK(chain.index(std::vector<std::int64_t>{5, 0}) == kNone);
    CHECK(chain.index(std::vector<std::int64_t>{4, 5}) == 29);
    CHECK(chain.state(7) == State{2, 1});
    CHECK(chain.row_sum_deviation() <= 1e-14);
  }

  TEST_CASE("flow identity holds on the single queue") {
    const ModelInstance inst = load_instance("mm1");
    const BoundContext ctx = prepare_bounds(inst.bound_model("n"));
    const TruncatedChain chain(inst.original, {40});
    const RewardTrace trace = iterate_rewards(chain, inst.performances.at("n"), 30);
    const auto points = interior_identity_points(chain, ctx.refinement);
    REQUIRE_FALSE(points.empty());
    CHECK(check_flow_identity(ctx.flows, ctx.refinement, chain, trace, points) <= 1e-10);
  }

  TEST_CASE("flow identity holds on the coupled queues") {
    const ModelInstance inst = load_instance("coupled3d");
    const BoundContext ctx = prepare_bounds(inst.bound_model("n1"));
    const TruncatedChain chain(inst.original, {14, 14, 14});
    const RewardTrace trace = iterate_rewards(chain, inst.performances.at("n1"), 20);
    const auto points = interior_identity_points(chain, ctx.refinement);
    REQUIRE(points.size() >= 10);
    CHECK(check_flow_identity(ctx.flows, ctx.refinement, chain, trace, points) <= 1e-8);
  }

  TEST_CASE("reward inequality with no perturbation") {
    const ModelInstance inst = load_instance("mm1");
    const TruncatedChain chain(inst.original, {60});
    const auto pibar = measure_on_chain(inst, chain);
    const CLinearFn f = inst.performances.at("n");
    const auto rep = check_reward_inequality(chain, chain, pibar, f, f, CLinearFn::zero(2, 1), 50);
    CHECK(rep.aggregate <= 1e-12);
    CHECK(rep.pointwise <= 1e-12);
  }

  TEST_CASE("error bound certificates satisfy the reward inequality") {
    const ModelInstance inst = load_instance("coupled3d");
    const BoundContext ctx = prepare_bounds(inst.bound_model("n1"));
    const std::vector<std::int64_t> caps(3, 16);
    const TruncatedChain original(inst.original, caps);
    const TruncatedChain perturbed(inst.perturbed, caps);
    const auto pibar = measure_on_chain(inst, perturbed);
    const CLinearFn& f = inst.performances.at("n1");
    for (BoundKind kind : {BoundKind::UpperError, BoundKind::LowerError}) {
      const BoundResult r = solve_bound(kind, ctx);
      REQUIRE(r.optimal());
      const auto rep = check_reward_inequality(original, perturbed, pibar, f, r.certificate.fbar, r.certificate.g, 200);
      CHECK(rep.aggregate <= 1e-8);
      const auto none = check_reward_inequality(original, perturbed, pibar, f, r.certificate.fbar,
                                                CLinearFn::zero(inst.partition.size(), 3), 200);
      CHECK(none.pointwise > 1e-6);
    }
  }

  TEST_CASE("parallel kernels match the serial reference") {
    const ModelInstance inst = load_instance("tandem3d");
    const TruncatedChain chain(inst.original, {9, 9, 9});
    std::vector<double> x(chain.size());
    std::iota(x.begin(), x.end(), 0.0);
    std::vector<double> a(chain.size()), b(chain.size());
    chain.apply(x, a);
    chain.apply_serial(x, b);
    CHECK(a == b);
    const auto reward = reward_vector(chain, inst.performances.begin()->second);
    const RewardTrace p = iterate_rewards(chain, reward, 25);
    const RewardTrace s = iterate_rewards_serial(chain, reward, 25);
    for (std::size_t t = 0; t <= 25; ++t) CHECK(p.at(t) == s.at(t));
  }

  TEST_CASE("doubling the caps moves the value by less than the tail allows") {
    const ModelFile file = load_model(model_path("example1"));
    const ModelInstance inst = instantiate(file);
    const CLinearFn& f = inst.performances.at("n1");
    const auto caps = inst.oracle_caps(1e-6);
    const double tail = measure_tail(*inst.measure, inst.partition, caps);
    std::vector<std::int64_t> doubled = caps;
    for (auto& c : doubled) c *= 2;
    const TruncatedChain small(inst.original, caps), large(inst.original, doubled);
    const double v1 = exact_performance(small, stationary_exact(small).pi, f);
    const double v2 = exact_performance(large, stationary_exact(large).pi, f);
    CHECK(std::abs(v1 - v2) <= 10.0 * std::max(tail, 1e-6) * static_cast<double>(doubled[0]));
  }

  TEST_CASE("tail caps cover the requested mass") {
    const ModelInstance inst = load_instance("mm1");
    const std::int64_t cap = cap_for_tail(*inst.measure, inst.partition, 1e-8);
    CHECK(std::pow(0.6, cap + 1) <= 1e-8);
    CHECK(std::pow(0.6, cap) > 1e-8);
    CHECK(measure_tail(*inst.measure, inst.partition, std::vector<std::int64_t>{cap}) <= 1e-8);
  }
}
