#include <cmath>
#include <sstream>

#include "doctest.h"
#include "rwb/bounds.hpp"
#include "rwb/oracle.hpp"
#include "support.hpp"

using namespace rwb;
using namespace rwb::testing;

namespace {

double truncated_truth(const ModelInstance& inst, const std::string& perf, const ModelFile& file) {
  const TruncatedChain chain(inst.original, inst.oracle_caps(file.tail));
  return exact_performance(chain, stationary_exact(chain).pi, inst.performances.at(perf));
}

}  // namespace

TEST_SUITE("bounds") {
  TEST_CASE("max terms resolve by the sign of the difference") {
    const AffineExpr a = AffineExpr::variable(0);
    const AffineExpr b = AffineExpr::variable(1);
    CHECK(resolve_max_term(0.0, b, a).is_constant());
    CHECK(resolve_max_term(0.0, b, a).constant == 0.0);
    CHECK(resolve_max_term(0.2, b, a) == AffineExpr::variable(1, 0.2));
    CHECK(resolve_max_term(-0.2, b, a) == AffineExpr::variable(0, 0.2));
  }

  TEST_CASE("bound kinds parse and print") {
    CHECK(parse_bound_kind("upper") == BoundKind::UpperError);
    CHECK(parse_bound_kind("cmp-lower") == BoundKind::ComparisonLower);
    CHECK_FALSE(parse_bound_kind("middle").has_value());
    BoundResult r;
    r.status = LPStatus::Optimal;
    r.clamped = true;
    CHECK(std::string(status_token(r)) == "CLAMPED");
    r.status = LPStatus::Infeasible;
    r.clamped = false;
    CHECK(std::string(status_token(r)) == "INFEASIBLE");
  }

  TEST_CASE("zero perturbation is exact on the single queue") {
    const ModelInstance inst = load_instance("mm1");
    const double rho = inst.values.at("rho");
    const BoundContext ctx = prepare_bounds(inst.bound_model("n"));
    CHECK(ctx.delta.is_zero());
    const SandwichResult s = sandwich(ctx);
    REQUIRE(s.exists());
    CHECK(s.upper.value == doctest::Approx(rho / (1.0 - rho)).epsilon(1e-8));
    CHECK(s.lower.value == doctest::Approx(rho / (1.0 - rho)).epsilon(1e-8));
    CHECK(s.comparison_upper.value == doctest::Approx(rho / (1.0 - rho)).epsilon(1e-8));
    CHECK(s.comparison_lower.value == doctest::Approx(rho / (1.0 - rho)).epsilon(1e-8));
    const BoundContext empty = prepare_bounds(inst.bound_model("empty"));
    CHECK(solve_bound(BoundKind::UpperError, empty).value == doctest::Approx(1.0 - rho).epsilon(1e-8));
    CHECK(solve_bound(BoundKind::LowerError, empty).value == doctest::Approx(1.0 - rho).epsilon(1e-8));
  }

  TEST_CASE("queue with a different empty-state arrival rate") {
    const ModelInstance inst = load_instance("mm1_origin");
    const double mu = inst.values.at("mu"), rho = inst.values.at("rho"), a = inst.values.at("lambda0") / mu;
    const double p0 = 1.0 / (1.0 + a / (1.0 - rho));
    const double mean = p0 * a / ((1.0 - rho) * (1.0 - rho));
    const BoundContext ctx = prepare_bounds(inst.bound_model("n"));
    const SandwichResult s = sandwich(ctx);
    REQUIRE(s.exists());
    CHECK(s.lower.value <= mean + 1e-8);
    CHECK(s.upper.value >= mean - 1e-8);
    if (s.comparison_upper.optimal()) CHECK(s.comparison_upper.value >= mean - 1e-8);
    if (s.comparison_lower.optimal()) CHECK(s.comparison_lower.value <= mean + 1e-8);
  }

  TEST_CASE("certificates replay and bracket the truncated chain on the example") {
    const ModelFile file = load_model(model_path("example1"));
    const ModelInstance inst = instantiate(file);
    const BoundContext ctx = prepare_bounds(inst.bound_model("n1"));
    const SandwichResult s = sandwich(ctx);
    const double truth = truncated_truth(inst, "n1", file);
    for (const BoundResult* r : {&s.upper, &s.lower, &s.comparison_upper, &s.comparison_lower}) {
      REQUIRE(r->optimal());
      CHECK(replay_certificate(ctx, *r) <= 1e-8);
    }
    CHECK(s.lower.value <= truth + 1e-8);
    CHECK(s.upper.value >= truth - 1e-8);
    CHECK(s.comparison_lower.value <= truth + 1e-8);
    CHECK(s.comparison_upper.value >= truth - 1e-8);
    CHECK(s.best_lower().value() <= s.best_upper().value());
  }

  TEST_CASE("tandem blocking probability bounds lie in the unit interval") {
    const ModelInstance inst = load_instance("tandem2d");
    const BoundContext ctx = prepare_bounds(inst.bound_model("blocking"));
    const BoundResult up = solve_bound(BoundKind::UpperError, ctx);
    const BoundResult lo = solve_bound(BoundKind::LowerError, ctx);
    REQUIRE(up.optimal());
    REQUIRE(lo.optimal());
    CHECK(lo.value >= 0.0);
    CHECK(lo.value <= up.value);
    CHECK(up.value <= 1.0);
  }

  TEST_CASE("decision variable count stays within the coefficient bound") {
    for (const char* name : {"mm1", "example1", "tandem2d", "coupled3d", "tandem3d"}) {
      const ModelInstance inst = load_instance(name);
      const BoundContext ctx = prepare_bounds(inst.bound_model(inst.performances.begin()->first));
      const std::size_t K = inst.partition.size(), M = inst.partition.dim();
      const std::size_t bound = 2 * K * (static_cast<std::size_t>(std::pow(3, M)) + 1) * (M + 1);
      for (BoundKind kind : {BoundKind::UpperError, BoundKind::LowerError, BoundKind::ComparisonUpper,
                             BoundKind::ComparisonLower}) {
        const BoundLP lp = build_bound_lp(kind, ctx);
        CHECK(lp.model.num_variables() <= bound);
        CHECK(lp.layout.count == lp.model.num_variables());
      }
    }
  }

  TEST_CASE("comparison kinds carry no error variables") {
    const ModelInstance inst = load_instance("example1");
    const BoundContext ctx = prepare_bounds(inst.bound_model("n1"));
    const BoundLP up = build_bound_lp(BoundKind::UpperError, ctx);
    const BoundLP cmp = build_bound_lp(BoundKind::ComparisonUpper, ctx);
    for (std::size_t k = 0; k < inst.partition.size(); ++k) {
      CHECK(up.layout.g[k] != kNone);
      CHECK(cmp.layout.g[k] == kNone);
    }
    CHECK(cmp.model.num_variables() < up.model.num_variables());
  }

  TEST_CASE("report lists the certificate") {
    const ModelInstance inst = load_instance("mm1");
    const BoundContext ctx = prepare_bounds(inst.bound_model("n"));
    const BoundResult r = solve_bound(BoundKind::UpperError, ctx);
    std::ostringstream os;
    write_report(r, inst.partition, os);
    const std::string text = os.str();
    CHECK(text.find("kind upper") != std::string::npos);
    CHECK(text.find("status OPTIMAL") != std::string::npos);
    CHECK(text.find("value 1.5") != std::string::npos);
  }
}
