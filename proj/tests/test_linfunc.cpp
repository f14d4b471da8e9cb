#include <random>

#include "doctest.h"
#include "rwb/errors.hpp"
#include "rwb/linfunc.hpp"
#include "support.hpp"

using namespace rwb;
using namespace rwb::testing;

namespace {

CLinearFn uniform_fn(std::size_t components, std::vector<double> row) {
  CLinearFn h = CLinearFn::zero(components, row.size() - 1);
  for (auto& c : h.coef) c = row;
  return h;
}

double value_of(const std::vector<AffineExpr>& coeffs, const State& n) {
  const AffineExpr e = evaluate_at(coeffs, n);
  REQUIRE(e.is_constant());
  return e.constant;
}

std::vector<AffineExpr> numeric(std::vector<double> row) {
  std::vector<AffineExpr> out;
  for (double c : row) out.push_back(AffineExpr::scalar(c));
  return out;
}

bool reduced_verdict(const std::vector<LinearConstraint>& rows) {
  for (const auto& r : rows)
    if (r.expr.constant > 0.0) return false;
  return true;
}

void for_each_state(const LatticeBox& b, std::int64_t extent, const std::function<void(const State&)>& fn) {
  State n = b.lower;
  while (true) {
    fn(n);
    std::size_t i = 0;
    for (; i < n.size(); ++i) {
      const std::int64_t hi = b.bounded(i) ? b.upper[i] : b.lower[i] + extent;
      if (n[i] < hi) {
        ++n[i];
        break;
      }
      n[i] = b.lower[i];
    }
    if (i == n.size()) return;
  }
}

}  // namespace

TEST_SUITE("linfunc") {
  TEST_CASE("evaluation of a component-wise affine function") {
    const Partition p = example_partition();
    CHECK(evaluate(uniform_fn(6, {0, 1, 1}), p, State{3, 4}) == 7.0);
  }

  TEST_CASE("indicator encodings") {
    const ModelInstance tandem = load_instance("tandem2d");
    const CLinearFn& blocking = tandem.performances.at("blocking");
    const auto M = static_cast<std::int64_t>(tandem.values.at("M"));
    CHECK(evaluate(blocking, tandem.partition, State{M, 3}) == 1.0);
    CHECK(evaluate(blocking, tandem.partition, State{M - 1, 3}) == 0.0);
    const ModelInstance coupled = load_instance("coupled3d");
    const CLinearFn& empty = coupled.performances.at("empty");
    CHECK(evaluate(empty, coupled.partition, State{0, 0, 0}) == 1.0);
    CHECK(evaluate(empty, coupled.partition, State{0, 1, 0}) == 0.0);
  }

  TEST_CASE("shifting n1 by one adds one") {
    const Refinement z = refine(example_partition());
    const SymbolicZLinear g = shift(uniform_fn(6, {0, 1, 0}), z, Step{1, 0});
    for (std::size_t j = 0; j < z.size(); ++j) {
      CHECK(g.coef[j][0].constant == 1.0);
      CHECK(g.coef[j][1].constant == 1.0);
      CHECK(g.coef[j][2].constant == 0.0);
    }
  }

  TEST_CASE("zero shift copies the parent coefficients") {
    const Partition p = example_partition();
    const Refinement z = refine(p);
    CLinearFn h = CLinearFn::zero(6, 2);
    for (std::size_t k = 0; k < 6; ++k) h.coef[k] = {double(k), 2.0 * k, -1.0 * k};
    const SymbolicZLinear g = shift(h, z, Step{0, 0});
    for (std::size_t j = 0; j < z.size(); ++j)
      for (std::size_t i = 0; i < 3; ++i) CHECK(g.coef[j][i].constant == h.coef[z.parent(j)][i]);
  }

  TEST_CASE("piecewise slope follows the shifted component") {
    const Partition p = example_partition();
    const Refinement z = refine(p);
    CLinearFn h = CLinearFn::zero(6, 2);
    h.coef[1] = {0, 1, 0};
    h.coef[2] = {0, 2, 0};
    const std::size_t j = z.locate(State{4, 0});
    const SymbolicZLinear g = shift(h, z, Step{1, 0});
    const State a{4, 0};
    const double fitted_slope = evaluate(h, p, State{a[0] + 1, 0}) / (a[0] + 1);
    CHECK(g.coef[j][1].constant == fitted_slope);
    CHECK(g.coef[j][1].constant == 2.0);
  }

  TEST_CASE("shift is exact at corners and random states") {
    const ModelInstance inst = load_instance("tandem3d");
    const Partition& p = inst.partition;
    const Refinement z = refine(p);
    std::mt19937 rng(5);
    CLinearFn h = CLinearFn::zero(p.size(), 3);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    for (auto& row : h.coef)
      for (auto& c : row) c = coef(rng);
    for (const auto& u : unit_steps(3)) {
      for (std::size_t j = 0; j < z.size(); ++j) {
        if (!z.cells().box(j).admits(u)) continue;
        const auto g = shift_cell(SymbolicCLinear::from_numeric(h), z, j, u);
        std::vector<State> states = corners_and_unbounded(z.cells().box(j)).corners;
        const State base = states.front();
        for (int t = 0; t < 5; ++t) {
          State n = base;
          for (std::size_t i = 0; i < 3; ++i)
            if (!z.cells().box(j).bounded(i)) n[i] += std::uniform_int_distribution<int>(0, 30)(rng);
          states.push_back(n);
        }
        for (const auto& n : states) {
          State m = n;
          for (std::size_t i = 0; i < 3; ++i) m[i] += u[i];
          CHECK(value_of(g, n) == doctest::Approx(evaluate(h, p, m)).epsilon(1e-13));
        }
      }
    }
    CHECK_THROWS_AS(shift_cell(SymbolicCLinear::from_numeric(h), z, z.locate(State{0, 0, 0}), Step{-1, 0, 0}),
                    StepNotAllowed);
  }

  TEST_CASE("corner reduction of the worked examples") {
    std::vector<LinearConstraint> rows;
    corner_reduce_cell(numeric({-3, 1, 0}), box({1, 1}, {4, kInfty}), 0, rows);
    REQUIRE(rows.size() == 3);
    CHECK_FALSE(reduced_verdict(rows));
    CHECK(value_of(numeric({-3, 1, 0}), State{4, 1}) == 1.0);

    rows.clear();
    corner_reduce_cell(numeric({-30, 1, 0.5}), box({1, 1}, {4, kInfty}), 0, rows);
    CHECK_FALSE(reduced_verdict(rows));

    rows.clear();
    corner_reduce_cell(numeric({5, 1, 1}), box({0, 0}, {0, 0}), 0, rows);
    CHECK(rows.size() == 1);
  }

  TEST_CASE("corner reduction agrees with enumeration") {
    const ModelInstance inst = load_instance("tandem2d");
    const Refinement z = refine(inst.partition);
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    std::size_t bounded_cells = 0;
    for (int trial = 0; trial < 20; ++trial) {
      for (std::size_t j = 0; j < z.size(); ++j) {
        const LatticeBox& b = z.cells().box(j);
        const std::vector<AffineExpr> e = numeric({coef(rng), coef(rng), coef(rng)});
        std::vector<LinearConstraint> rows;
        corner_reduce_cell(e, b, j, rows);
        CHECK(rows.size() <= 4 + 2);
        bool all = true;
        for_each_state(b, 40, [&](const State& n) { all = all && value_of(e, n) <= 1e-12; });
        const bool bounded = b.bounded(0) && b.bounded(1);
        if (bounded) {
          ++bounded_cells;
          CHECK(reduced_verdict(rows) == all);
        } else if (reduced_verdict(rows)) {
          CHECK(all);
        }
      }
    }
    CHECK(bounded_cells > 0);
  }

  TEST_CASE("affine expressions merge terms") {
    AffineAccumulator acc;
    acc.add(AffineExpr::variable(3, 2.0));
    acc.add(AffineExpr::variable(1, 1.0));
    acc.add(AffineExpr::variable(3, -2.0));
    acc.add_constant(4.0);
    const AffineExpr e = acc.take();
    REQUIRE(e.terms.size() == 1);
    CHECK(e.terms[0].first == 1);
    CHECK(e.constant == 4.0);
  }

  TEST_CASE("corner_reduce emits per-cell corner and coefficient rows") {
    const Refinement z = refine(example_partition());
    SymbolicZLinear e;
    e.dim = 2;
    for (std::size_t j = 0; j < z.size(); ++j) e.coef.push_back(numeric({-1, 0, 0}));
    const auto rows = corner_reduce(e, z);
    std::size_t expected = 0;
    for (std::size_t j = 0; j < z.size(); ++j) {
      const auto cs = corners_and_unbounded(z.cells().box(j));
      expected += cs.corners.size() + cs.unbounded.size();
      CHECK(cs.corners.size() <= 4);
    }
    CHECK(rows.size() == expected);
  }
}
