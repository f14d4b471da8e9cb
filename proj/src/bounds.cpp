#include "rwb/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <ostream>
#include <unordered_map>

#include "rwb/errors.hpp"

namespace rwb {

const char* to_string(BoundKind kind) {
  switch (kind) {
    case BoundKind::UpperError: return "upper";
    case BoundKind::LowerError: return "lower";
    case BoundKind::ComparisonUpper: return "cmp-upper";
    case BoundKind::ComparisonLower: return "cmp-lower";
  }
  return "unknown";
}

std::optional<BoundKind> parse_bound_kind(std::string_view text) {
  if (text == "upper") return BoundKind::UpperError;
  if (text == "lower") return BoundKind::LowerError;
  if (text == "cmp-upper") return BoundKind::ComparisonUpper;
  if (text == "cmp-lower") return BoundKind::ComparisonLower;
  return std::nullopt;
}

const char* status_token(const BoundResult& result) {
  if (result.clamped) return "CLAMPED";
  return to_string(result.status);
}

BoundContext prepare_bounds(BoundModel model, const FlowConfig& flow_config) {
  BoundContext ctx;
  ctx.delta = delta(model.original, model.perturbed);
  const Partition& partition = model.original.partition;
  if (model.performance.coef.size() != partition.size() || model.performance.dim != partition.dim())
    throw ModelError("performance function does not match the partition");
  if (!model.measure) throw ModelError("no stationary measure supplied");
  ctx.refinement = refine(partition, 1);
  ctx.eval = refine(partition, 2);
  ctx.eval_cell_owner.resize(ctx.eval.size());
  for (std::size_t e = 0; e < ctx.eval.size(); ++e)
    ctx.eval_cell_owner[e] = ctx.refinement.locate(ctx.eval.cells().box(e).lower);
  double total = 0.0;
  for (std::size_t k = 0; k < partition.size(); ++k) {
    ctx.moments.push_back(model.measure->component_moments(partition, k));
    total += ctx.moments.back().mass;
  }
  for (auto& m : ctx.moments) {
    m.mass /= total;
    for (auto& x : m.first) x /= total;
  }
  ctx.flows = solve_all_flows(ctx.refinement, model.original, flow_config);
  ctx.model = std::move(model);
  return ctx;
}

AffineExpr resolve_max_term(double delta, const AffineExpr& x, const AffineExpr& y) {
  if (delta > 0.0) return AffineExpr(x).scale(delta);
  if (delta < 0.0) return AffineExpr(y).scale(-delta);
  return AffineExpr{};
}

namespace {

bool has_g(BoundKind kind) { return kind == BoundKind::UpperError || kind == BoundKind::LowerError; }
bool uses_c1(BoundKind kind) { return kind != BoundKind::ComparisonUpper; }
bool uses_c2(BoundKind kind) { return kind != BoundKind::ComparisonLower; }

class DenseAccumulator {
 public:
  explicit DenseAccumulator(std::size_t n) : value_(n, 0.0), seen_(n, 0) {}

  void add(std::size_t v, double c) {
    if (c == 0.0) return;
    if (!seen_[v]) {
      seen_[v] = 1;
      touched_.push_back(v);
    }
    value_[v] += c;
  }
  void add_constant(double c) { constant_ += c; }

  AffineExpr take() {
    std::sort(touched_.begin(), touched_.end());
    AffineExpr e;
    e.constant = constant_;
    for (std::size_t v : touched_) {
      if (value_[v] != 0.0) e.terms.emplace_back(static_cast<VarId>(v), value_[v]);
      value_[v] = 0.0;
      seen_[v] = 0;
    }
    touched_.clear();
    constant_ = 0.0;
    return e;
  }

 private:
  std::vector<double> value_;
  std::vector<char> seen_;
  std::vector<std::size_t> touched_;
  double constant_ = 0.0;
};

// Coefficients 0..M of a Z-linear function on one evaluation cell.
class ZLinearBuilder {
 public:
  ZLinearBuilder(std::size_t dim, std::size_t vars) : acc_(dim + 1, DenseAccumulator(vars)) {}

  // w * H(n + d), H with coefficient ids base, ..., base + M.
  void add_symbolic(std::size_t base, std::span<const int> d, double w) {
    acc_[0].add(base, w);
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d[i] != 0) acc_[0].add(base + 1 + i, w * d[i]);
      acc_[i + 1].add(base + 1 + i, w);
    }
  }
  void add_numeric(const std::vector<double>& h, std::span<const int> d, double w) {
    double c = h[0];
    for (std::size_t i = 0; i < d.size(); ++i) {
      c += h[i + 1] * d[i];
      acc_[i + 1].add_constant(w * h[i + 1]);
    }
    acc_[0].add_constant(w * c);
  }
  std::vector<AffineExpr> take() {
    std::vector<AffineExpr> out;
    out.reserve(acc_.size());
    for (auto& a : acc_) out.push_back(a.take());
    return out;
  }

 private:
  std::vector<DenseAccumulator> acc_;
};

enum Family : std::uint8_t { kC1, kC2, kC3, kC4, kNonnegF, kNonnegG, kNonnegA, kNonnegB };
const char* family_name(std::uint8_t f) {
  static const char* names[] = {"c1", "c2", "c3", "c4", "nf", "ng", "na", "nb"};
  return names[f];
}

struct TaggedRow {
  AffineExpr expr;
  std::uint8_t family;
  std::size_t step_code;
  std::size_t index;  // corner index, then unbounded-dimension rows
};

void reduce_into(const std::vector<AffineExpr>& coeffs, const LatticeBox& box, std::uint8_t family,
                 std::size_t step_code, std::vector<TaggedRow>& out) {
  std::vector<LinearConstraint> rows;
  corner_reduce_cell(coeffs, box, kNone, rows);
  for (std::size_t t = 0; t < rows.size(); ++t) out.push_back({std::move(rows[t].expr), family, step_code, t});
}

VariableLayout make_layout(BoundKind kind, const Partition& partition, LPModel& model) {
  VariableLayout layout;
  const std::size_t dim = partition.dim();
  layout.dim = dim;
  auto block = [&](const std::string& prefix) {
    const std::size_t base = model.num_variables();
    for (std::size_t i = 0; i <= dim; ++i) model.add_free_variable(prefix + "_" + std::to_string(i));
    return base;
  };
  const std::size_t K = partition.size();
  layout.g.assign(K, kNone);
  layout.a.resize(K);
  layout.b.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    layout.fbar.push_back(block("fbar_k" + std::to_string(k)));
    if (has_g(kind)) layout.g[k] = block("g_k" + std::to_string(k));
  }
  for (std::size_t k = 0; k < K; ++k)
    for (const auto& u : partition.steps(k)) {
      if (is_zero(u)) continue;
      const std::string tag = "_k" + std::to_string(k) + "_u" + std::to_string(offset_code(u));
      layout.a[k][u] = block("a" + tag);
      layout.b[k][u] = block("b" + tag);
    }
  layout.count = model.num_variables();
  return layout;
}

std::vector<TaggedRow> cell_rows(BoundKind kind, const BoundContext& ctx, const VariableLayout& layout,
                                 std::size_t e) {
  const std::size_t dim = layout.dim;
  const Refinement& eval = ctx.eval;
  const LatticeBox& box = eval.cells().box(e);
  const std::size_t k = eval.parent(e);
  const std::size_t j = ctx.eval_cell_owner[e];
  const CLinearFn& F = ctx.model.performance;
  const Step zero(dim, 0);
  ZLinearBuilder zb(dim, layout.count);
  std::vector<TaggedRow> out;

  std::vector<Step> steps;
  for (const auto& u : eval.components().steps(k))
    if (!is_zero(u)) steps.push_back(u);

  // Error-bound families: no shifts, everything lives on component k.
  for (int family : {kC1, kC2}) {
    if (family == kC1 && !uses_c1(kind)) continue;
    if (family == kC2 && !uses_c2(kind)) continue;
    const double s = family == kC1 ? 1.0 : -1.0;
    zb.add_symbolic(layout.fbar[k], zero, s);
    zb.add_numeric(F.coef[k], zero, -s);
    if (has_g(kind)) zb.add_symbolic(layout.g[k], zero, -1.0);
    for (const auto& u : steps) {
      const double d = ctx.delta.get(k, u);
      if (d == 0.0) continue;
      // C1: max{d B, -d A};  C2: max{d A, -d B}.
      const bool use_b = (family == kC1) == (d > 0.0);
      zb.add_symbolic(use_b ? layout.b[k].at(u) : layout.a[k].at(u), zero, std::abs(d));
    }
    reduce_into(zb.take(), box, static_cast<std::uint8_t>(family), 0, out);
  }

  // Bias families.
  for (const auto& u : steps) {
    const std::size_t ucode = offset_code(u);
    const CellStepFlow* flow = ctx.flows.find(j, u);
    if (!flow) throw InternalError(j, u, "missing flow subproblem");
    const std::size_t ku = eval.neighbor(e, u);
    for (int family : {kC3, kC4}) {
      const double s = family == kC3 ? 1.0 : -1.0;
      const auto& fn = family == kC3 ? layout.b : layout.a;
      zb.add_numeric(F.coef[ku], u, s);
      zb.add_numeric(F.coef[k], zero, -s);
      const auto& fp = flow->problem;
      for (std::size_t a = 0; a < fp.arcs.size(); ++a) {
        const double phi = flow->phi[a];
        if (phi == 0.0) continue;
        const Step& d = fp.nodes[fp.arcs[a].from];
        const std::size_t kd = eval.neighbor(e, d);
        zb.add_symbolic(fn[kd].at(fp.arcs[a].v), d, phi);
      }
      zb.add_symbolic(fn[k].at(u), zero, -1.0);
      reduce_into(zb.take(), box, static_cast<std::uint8_t>(family), ucode, out);
    }
  }

  // Pointwise non-negativity.
  zb.add_symbolic(layout.fbar[k], zero, -1.0);
  reduce_into(zb.take(), box, kNonnegF, 0, out);
  if (has_g(kind)) {
    zb.add_symbolic(layout.g[k], zero, -1.0);
    reduce_into(zb.take(), box, kNonnegG, 0, out);
  }
  for (const auto& u : steps) {
    zb.add_symbolic(layout.a[k].at(u), zero, -1.0);
    reduce_into(zb.take(), box, kNonnegA, offset_code(u), out);
    zb.add_symbolic(layout.b[k].at(u), zero, -1.0);
    reduce_into(zb.take(), box, kNonnegB, offset_code(u), out);
  }
  return out;
}

std::size_t row_hash(const AffineExpr& e) {
  std::size_t h = std::hash<double>{}(e.constant);
  for (const auto& [v, c] : e.terms) {
    h ^= std::hash<std::uint64_t>{}(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= std::hash<double>{}(c) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

}  // namespace

BoundLP build_bound_lp(BoundKind kind, const BoundContext& ctx) {
  BoundLP lp;
  lp.kind = kind;
  const Partition& partition = ctx.model.original.partition;
  lp.layout = make_layout(kind, partition, lp.model);

  const std::size_t cells = ctx.eval.size();
  std::vector<std::vector<TaggedRow>> per_cell(cells);
  std::exception_ptr error;
  const auto count = static_cast<std::ptrdiff_t>(cells);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t e = 0; e < count; ++e) {
    try {
      per_cell[static_cast<std::size_t>(e)] = cell_rows(kind, ctx, lp.layout, static_cast<std::size_t>(e));
    } catch (...) {
#pragma omp critical(rwb_bounds_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);

  std::unordered_map<std::size_t, std::vector<std::size_t>> seen;
  for (std::size_t e = 0; e < cells; ++e) {
    for (auto& row : per_cell[e]) {
      ++lp.generated_rows;
      if (row.expr.terms.empty() && row.expr.constant <= 0.0) continue;
      const std::size_t h = row_hash(row.expr);
      auto& bucket = seen[h];
      bool duplicate = false;
      for (std::size_t idx : bucket) {
        const auto& existing = lp.model.rows()[idx];
        if (existing.rhs != -row.expr.constant || existing.terms.size() != row.expr.terms.size()) continue;
        if (std::equal(existing.terms.begin(), existing.terms.end(), row.expr.terms.begin(),
                       [](const auto& x, const auto& y) { return x.first == y.first && x.second == y.second; })) {
          duplicate = true;
          break;
        }
      }
      if (duplicate) continue;
      LPTerms terms;
      terms.reserve(row.expr.terms.size());
      for (const auto& [v, c] : row.expr.terms) terms.emplace_back(v, c);
      std::string name = std::string(family_name(row.family)) + "_e" + std::to_string(e) + "_u" +
                         std::to_string(row.step_code) + "_" + std::to_string(row.index);
      bucket.push_back(lp.model.add_constraint(std::move(name), std::move(terms), Relation::LessEqual,
                                               -row.expr.constant));
    }
  }

  LPTerms objective;
  const double g_sign = kind == BoundKind::LowerError ? -1.0 : 1.0;
  for (std::size_t k = 0; k < partition.size(); ++k) {
    const auto& m = ctx.moments[k];
    objective.emplace_back(lp.layout.fbar[k], m.mass);
    for (std::size_t i = 0; i < lp.layout.dim; ++i) objective.emplace_back(lp.layout.fbar[k] + 1 + i, m.first[i]);
    if (lp.layout.g[k] != kNone) {
      objective.emplace_back(lp.layout.g[k], g_sign * m.mass);
      for (std::size_t i = 0; i < lp.layout.dim; ++i)
        objective.emplace_back(lp.layout.g[k] + 1 + i, g_sign * m.first[i]);
    }
  }
  const bool minimize = kind == BoundKind::UpperError || kind == BoundKind::ComparisonUpper;
  lp.model.set_objective(minimize ? Sense::Minimize : Sense::Maximize, std::move(objective));
  return lp;
}

namespace {

CLinearFn read_block(const std::vector<double>& x, const std::vector<std::size_t>& bases, std::size_t dim) {
  CLinearFn h = CLinearFn::zero(bases.size(), dim);
  for (std::size_t k = 0; k < bases.size(); ++k) {
    if (bases[k] == kNone) continue;
    for (std::size_t i = 0; i <= dim; ++i) h.coef[k][i] = x[bases[k] + i];
  }
  return h;
}

Certificate extract_certificate(const VariableLayout& layout, const std::vector<double>& x) {
  Certificate c;
  const std::size_t K = layout.fbar.size();
  c.fbar = read_block(x, layout.fbar, layout.dim);
  c.g = read_block(x, layout.g, layout.dim);
  for (std::size_t k = 0; k < K; ++k) {
    for (const auto& [u, base] : layout.a[k]) {
      auto [it, inserted] = c.a.try_emplace(u, CLinearFn::zero(K, layout.dim));
      for (std::size_t i = 0; i <= layout.dim; ++i) it->second.coef[k][i] = x[base + i];
    }
    for (const auto& [u, base] : layout.b[k]) {
      auto [it, inserted] = c.b.try_emplace(u, CLinearFn::zero(K, layout.dim));
      for (std::size_t i = 0; i <= layout.dim; ++i) it->second.coef[k][i] = x[base + i];
    }
  }
  return c;
}

}  // namespace

BoundResult solve_bound(BoundKind kind, const BoundContext& context, const BoundSolveConfig& config) {
  BoundLP lp = build_bound_lp(kind, context);
  BoundResult result;
  result.kind = kind;
  result.variables = lp.model.num_variables();
  result.constraints = lp.model.num_constraints();
  const LPSolution sol =
      config.backend == LPBackend::External ? solve_lp_external(lp.model) : solve_lp(lp.model, config.lp);
  result.status = sol.status;
  result.iterations = sol.iterations;
  result.value = std::numeric_limits<double>::quiet_NaN();
  result.lp_objective = result.value;
  if (sol.status != LPStatus::Optimal) return result;
  result.residual = sol.max_residual;
  result.lp_objective = sol.objective;
  result.value = sol.objective;
  result.certificate = extract_certificate(lp.layout, sol.values);
  if (kind == BoundKind::LowerError && context.model.performance_nonneg && result.value < 0.0) {
    result.value = 0.0;
    result.clamped = true;
  }
  return result;
}

namespace {

double value_at(const CLinearFn& h, const Partition& partition, std::span<const std::int64_t> n) {
  return evaluate(h, partition, n);
}

// Pointwise left-hand sides of every family at state n, each required to be
// <= 0. The order depends only on the cell of n.
std::vector<double> family_values(const BoundContext& ctx, const BoundResult& r, std::span<const std::int64_t> n) {
  const Partition& partition = ctx.model.original.partition;
  const std::size_t dim = partition.dim();
  const std::size_t k = partition.locate(n);
  const CLinearFn& F = ctx.model.performance;
  const Certificate& c = r.certificate;
  const double fbar = value_at(c.fbar, partition, n);
  const double g = value_at(c.g, partition, n);
  const double f = value_at(F, partition, n);
  std::vector<double> out{-fbar, -g};

  double c1 = fbar - f - g;
  double c2 = f - fbar - g;
  State m(dim);
  for (const auto& u : partition.steps(k)) {
    if (is_zero(u)) continue;
    const double a = value_at(c.a.at(u), partition, n);
    const double b = value_at(c.b.at(u), partition, n);
    out.push_back(-a);
    out.push_back(-b);
    const double d = ctx.delta.get(k, u);
    c1 += std::max(d * b, -d * a);
    c2 += std::max(d * a, -d * b);

    for (std::size_t i = 0; i < dim; ++i) m[i] = n[i] + u[i];
    const double drift = value_at(F, partition, m) - f;
    const CellStepFlow* flow = ctx.flows.find(ctx.refinement.locate(n), u);
    double sum_b = 0.0;
    double sum_a = 0.0;
    for (std::size_t t = 0; t < flow->problem.arcs.size(); ++t) {
      const auto& arc = flow->problem.arcs[t];
      const auto& dd = flow->problem.nodes[arc.from];
      for (std::size_t i = 0; i < dim; ++i) m[i] = n[i] + dd[i];
      sum_b += flow->phi[t] * value_at(c.b.at(arc.v), partition, m);
      sum_a += flow->phi[t] * value_at(c.a.at(arc.v), partition, m);
    }
    out.push_back(drift + sum_b - b);
    out.push_back(-drift + sum_a - a);
  }
  if (uses_c1(r.kind)) out.push_back(c1);
  if (uses_c2(r.kind)) out.push_back(c2);
  return out;
}

}  // namespace

double replay_certificate(const BoundContext& ctx, const BoundResult& result) {
  if (!result.optimal()) return 0.0;
  double worst = 0.0;
  for (std::size_t e = 0; e < ctx.eval.size(); ++e) {
    const CornerSet cs = corners_and_unbounded(ctx.eval.cells().box(e));
    for (const auto& n : cs.corners) {
      const std::vector<double> base = family_values(ctx, result, n);
      for (double v : base) worst = std::max(worst, v);
      // Every family is affine along an unbounded dimension of the cell, so
      // one step measures its growth.
      for (std::size_t i : cs.unbounded) {
        State next = n;
        ++next[i];
        const std::vector<double> ahead = family_values(ctx, result, next);
        for (std::size_t t = 0; t < base.size(); ++t) worst = std::max(worst, ahead[t] - base[t]);
      }
    }
  }
  return worst;
}

std::optional<double> SandwichResult::best_upper() const {
  std::optional<double> v;
  for (const BoundResult* r : {&upper, &comparison_upper})
    if (r->optimal() && (!v || r->value < *v)) v = r->value;
  return v;
}

std::optional<double> SandwichResult::best_lower() const {
  std::optional<double> v;
  for (const BoundResult* r : {&lower, &comparison_lower})
    if (r->optimal() && (!v || r->value > *v)) v = r->value;
  return v;
}

SandwichResult sandwich(const BoundContext& context, const BoundSolveConfig& config) {
  const BoundKind kinds[] = {BoundKind::UpperError, BoundKind::LowerError, BoundKind::ComparisonUpper,
                             BoundKind::ComparisonLower};
  BoundResult results[4];
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < 4; ++t) {
    try {
      results[t] = solve_bound(kinds[t], context, config);
    } catch (...) {
#pragma omp critical(rwb_sandwich_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return SandwichResult{results[0], results[1], results[2], results[3]};
}

void write_report(const BoundResult& result, const Partition& partition, std::ostream& os) {
  const auto precision = os.precision(12);
  os << "kind " << to_string(result.kind) << "\n";
  os << "status " << status_token(result) << "\n";
  if (result.optimal()) {
    os << "value " << result.value << "\n";
    if (result.clamped) os << "lp_objective " << result.lp_objective << "\n";
  }
  os << "variables " << result.variables << "\n";
  os << "constraints " << result.constraints << "\n";
  if (result.optimal()) {
    auto table = [&](const std::string& label, const CLinearFn& h) {
      for (std::size_t k = 0; k < partition.size(); ++k) {
        os << label << " component " << k << ' ' << partition.box(k) << ':';
        for (double v : h.coef[k]) os << ' ' << v;
        os << "\n";
      }
    };
    table("fbar", result.certificate.fbar);
    if (result.kind == BoundKind::UpperError || result.kind == BoundKind::LowerError) table("g", result.certificate.g);
    for (const auto& [u, h] : result.certificate.a) table("a" + format_vector(u), h);
    for (const auto& [u, h] : result.certificate.b) table("b" + format_vector(u), h);
  }
  os.precision(precision);
}

}  // namespace rwb
