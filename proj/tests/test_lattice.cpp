#include <algorithm>
#include <random>
#include <set>

#include "doctest.h"
#include "rwb/errors.hpp"
#include "rwb/lattice.hpp"
#include "support.hpp"

using namespace rwb;
using namespace rwb::testing;

namespace {

using Interval = std::pair<std::int64_t, std::int64_t>;

std::vector<Interval> intervals(const Partition& cells, std::size_t dim) {
  std::set<Interval> out;
  for (const auto& b : cells.boxes()) out.insert({b.lower[dim], b.upper[dim]});
  return {out.begin(), out.end()};
}

State sample(const LatticeBox& b, std::mt19937& rng) {
  State n(b.dim());
  for (std::size_t i = 0; i < b.dim(); ++i) {
    const std::int64_t hi = b.bounded(i) ? b.upper[i] : b.lower[i] + 20;
    n[i] = std::uniform_int_distribution<std::int64_t>(b.lower[i], hi)(rng);
  }
  return n;
}

}  // namespace

TEST_SUITE("lattice") {
  TEST_CASE("example partition validates with six components") {
    const Partition p = example_partition();
    CHECK(p.size() == 6);
    CHECK(p.dim() == 2);
  }

  TEST_CASE("box invariants") {
    CHECK_THROWS_AS(box({2}, {1}), InvalidBox);
    CHECK_THROWS_AS(box({0, 0}, {1}), InvalidBox);
    const LatticeBox b = box({1, 1}, {4, kInfty});
    CHECK(b.contains(State{4, 1000}));
    CHECK_FALSE(b.contains(State{5, 1}));
    CHECK_FALSE(b.contains(State{0, 1}));
  }

  TEST_CASE("a single orthant box mixes neighborhoods") {
    CHECK_THROWS_AS(validate_partition({box({0, 0}, {kInfty, kInfty})}, 2), MixedNeighborhood);
  }

  TEST_CASE("coverage gap reports the uncovered witness") {
    try {
      validate_partition({box({0, 0}, {0, 0}), box({1, 0}, {kInfty, 0}), box({0, 1}, {0, kInfty})}, 2);
      FAIL("expected CoverageGap");
    } catch (const CoverageGap& e) {
      CHECK(e.witness == std::vector<std::int64_t>{1, 1});
    }
  }

  TEST_CASE("overlapping boxes are rejected") {
    CHECK_THROWS_AS(validate_partition({box({0}, {0}), box({1}, {kInfty}), box({3}, {5})}, 1), Overlap);
  }

  TEST_CASE("locate on the example partition") {
    const Partition p = example_partition();
    CHECK(p.locate(State{3, 0}) == 1);
    CHECK(p.locate(State{0, 0}) == 0);
    CHECK(p.locate(State{7, 3}) == 5);
    std::mt19937 rng(7);
    for (int t = 0; t < 200; ++t) {
      State n{std::uniform_int_distribution<std::int64_t>(0, 30)(rng),
              std::uniform_int_distribution<std::int64_t>(0, 30)(rng)};
      CHECK(p.box(p.locate(n)).contains(n));
    }
  }

  TEST_CASE("example refinement has 18 cells on a 6 by 3 grid") {
    const Refinement z = refine(example_partition());
    CHECK(z.size() == 18);
    const std::vector<Interval> dim1 = {{0, 0}, {1, 1}, {2, 3}, {4, 4}, {5, 5}, {6, kInfty}};
    const std::vector<Interval> dim2 = {{0, 0}, {1, 1}, {2, kInfty}};
    CHECK(intervals(z.cells(), 0) == dim1);
    CHECK(intervals(z.cells(), 1) == dim2);
    std::set<std::pair<Interval, Interval>> products;
    for (const auto& b : z.cells().boxes()) products.insert({{b.lower[0], b.upper[0]}, {b.lower[1], b.upper[1]}});
    CHECK(products.size() == 18);
  }

  TEST_CASE("one-dimensional refinement") {
    const Refinement z = refine(validate_partition({box({0}, {0}), box({1}, {kInfty})}, 1));
    REQUIRE(z.size() == 3);
    CHECK(z.cells().box(0) == box({0}, {0}));
    CHECK(z.cells().box(1) == box({1}, {1}));
    CHECK(z.cells().box(2) == box({2}, {kInfty}));
  }

  TEST_CASE("refinement is deterministic and refining again only nests") {
    const Refinement once = refine(example_partition());
    CHECK(refine(example_partition()).cells() == once.cells());
    const Refinement twice = refine(once.cells());
    for (const auto& b : twice.cells().boxes()) {
      const std::size_t j = once.locate(b.lower);
      const LatticeBox& outer = once.cells().box(j);
      for (std::size_t i = 0; i < b.dim(); ++i) {
        CHECK(b.lower[i] >= outer.lower[i]);
        CHECK((outer.bounded(i) ? b.upper[i] <= outer.upper[i] : true));
      }
    }
  }

  TEST_CASE("refinement cell count is bounded by the grid") {
    const Partition p = example_partition();
    const Refinement z = refine(p);
    std::size_t bound = 1;
    for (std::size_t i = 0; i < p.dim(); ++i) bound *= 2 * p.size() + 1;
    CHECK(z.size() <= bound);
  }

  TEST_CASE("neighbor map agrees with locate on sampled states") {
    for (const Partition& p : {example_partition(), load_instance("coupled3d").partition}) {
      const Refinement z = refine(p);
      std::mt19937 rng(11);
      for (std::size_t j = 0; j < z.size(); ++j) {
        const LatticeBox& b = z.cells().box(j);
        std::vector<State> states = corners_and_unbounded(b).corners;
        while (states.size() < 50) states.push_back(sample(b, rng));
        for (const auto& u : p.steps(z.parent(j))) {
          const std::size_t k = neighbor_component(z, j, u);
          for (const auto& n : states) {
            State m = n;
            for (std::size_t i = 0; i < n.size(); ++i) m[i] += u[i];
            REQUIRE(p.locate(m) == k);
          }
        }
      }
    }
  }

  TEST_CASE("neighbor lookups on the example refinement") {
    const Refinement z = refine(example_partition());
    const std::size_t j1 = z.locate(State{1, 0});
    const std::size_t j4 = z.locate(State{4, 0});
    CHECK(neighbor_component(z, j1, Step{-1, 0}) == 0);
    CHECK(neighbor_component(z, j4, Step{1, 0}) == 2);
    for (std::size_t j = 0; j < z.size(); ++j) CHECK(neighbor_component(z, j, Step{0, 0}) == z.parent(j));
    CHECK_THROWS_AS(neighbor_component(z, z.locate(State{0, 0}), Step{-1, 0}), StepNotAllowed);
  }

  TEST_CASE("corners and unbounded dimensions") {
    const CornerSet a = corners_and_unbounded(box({1, 1}, {4, kInfty}));
    CHECK(a.unbounded == std::vector<std::size_t>{1});
    CHECK(std::set<State>(a.corners.begin(), a.corners.end()) == std::set<State>{{1, 1}, {4, 1}});
    const CornerSet b = corners_and_unbounded(box({0, 0}, {0, 0}));
    CHECK(b.unbounded.empty());
    CHECK(b.corners == std::vector<State>{{0, 0}});
    const CornerSet c = corners_and_unbounded(box({2, 0, 1}, {3, 0, kInfty}));
    CHECK(c.unbounded == std::vector<std::size_t>{2});
    CHECK(std::set<State>(c.corners.begin(), c.corners.end()) == std::set<State>{{2, 0, 1}, {3, 0, 1}});
  }

  TEST_CASE("offset codes round-trip") {
    for (std::size_t dim = 1; dim <= 3; ++dim)
      for (std::size_t code = 0; code < offset_space(dim); ++code)
        CHECK(offset_code(decode_offset(code, dim)) == code);
    CHECK(unit_steps(2).size() == 9);
  }
}
