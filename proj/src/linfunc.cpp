#include "rwb/linfunc.hpp"

#include <algorithm>

#include "rwb/errors.hpp"

namespace rwb {

namespace {

void normalize(std::vector<std::pair<VarId, double>>& terms) {
  std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::size_t out = 0;
  for (std::size_t i = 0; i < terms.size();) {
    VarId v = terms[i].first;
    double c = 0.0;
    while (i < terms.size() && terms[i].first == v) c += terms[i++].second;
    if (c != 0.0) terms[out++] = {v, c};
  }
  terms.resize(out);
  double scale = 1.0;
  for (const auto& t : terms) scale = std::max(scale, std::abs(t.second));
  std::erase_if(terms, [&](const auto& t) { return std::abs(t.second) <= kNegligible * scale; });
}

}  // namespace

AffineExpr AffineExpr::variable(VarId v, double coef) {
  AffineExpr e;
  if (coef != 0.0) e.terms.emplace_back(v, coef);
  return e;
}

AffineExpr AffineExpr::scalar(double c) {
  AffineExpr e;
  e.constant = c;
  return e;
}

AffineExpr& AffineExpr::add(const AffineExpr& other, double s) {
  if (s == 0.0) return *this;
  constant += s * other.constant;
  for (const auto& [v, c] : other.terms) terms.emplace_back(v, s * c);
  normalize(terms);
  return *this;
}

AffineExpr& AffineExpr::scale(double s) {
  constant *= s;
  for (auto& t : terms) t.second *= s;
  if (s == 0.0) terms.clear();
  return *this;
}

double AffineExpr::evaluate(std::span<const double> x) const {
  double v = constant;
  for (const auto& [id, c] : terms) v += c * x[id];
  return v;
}

void AffineAccumulator::add(const AffineExpr& e, double scale) {
  if (scale == 0.0) return;
  constant_ += scale * e.constant;
  for (const auto& [v, c] : e.terms) pending_.emplace_back(v, scale * c);
}

AffineExpr AffineAccumulator::take() {
  AffineExpr e;
  e.constant = constant_;
  e.terms = std::move(pending_);
  normalize(e.terms);
  pending_.clear();
  constant_ = 0.0;
  return e;
}

CLinearFn CLinearFn::zero(std::size_t components, std::size_t dim) {
  return CLinearFn{dim, std::vector<std::vector<double>>(components, std::vector<double>(dim + 1, 0.0))};
}

double evaluate(const CLinearFn& h, const Partition& partition, std::span<const std::int64_t> n) {
  const auto& c = h.coef[partition.locate(n)];
  double v = c[0];
  for (std::size_t i = 0; i < h.dim; ++i) v += c[i + 1] * static_cast<double>(n[i]);
  return v;
}

SymbolicCLinear SymbolicCLinear::from_numeric(const CLinearFn& h) {
  SymbolicCLinear s;
  s.dim = h.dim;
  s.coef.resize(h.coef.size());
  for (std::size_t k = 0; k < h.coef.size(); ++k)
    for (double c : h.coef[k]) s.coef[k].push_back(AffineExpr::scalar(c));
  return s;
}

std::vector<AffineExpr> shift_cell(const SymbolicCLinear& h, const Refinement& refinement, std::size_t j,
                                   std::span<const int> d) {
  const std::size_t k = refinement.neighbor(j, d);
  const auto& src = h.coef[k];
  std::vector<AffineExpr> g(src.begin(), src.end());
  // H(n + d) = h_0 + sum_i h_i d_i + sum_i h_i n_i
  AffineAccumulator acc;
  acc.add(src[0]);
  for (std::size_t i = 0; i < h.dim; ++i)
    if (d[i] != 0) acc.add(src[i + 1], d[i]);
  g[0] = acc.take();
  return g;
}

SymbolicZLinear shift(const SymbolicCLinear& h, const Refinement& refinement, std::span<const int> u) {
  SymbolicZLinear out;
  out.dim = h.dim;
  out.coef.reserve(refinement.size());
  for (std::size_t j = 0; j < refinement.size(); ++j) out.coef.push_back(shift_cell(h, refinement, j, u));
  return out;
}

SymbolicZLinear shift(const CLinearFn& h, const Refinement& refinement, std::span<const int> u) {
  return shift(SymbolicCLinear::from_numeric(h), refinement, u);
}

AffineExpr evaluate_at(std::span<const AffineExpr> coeffs, std::span<const std::int64_t> n) {
  AffineAccumulator acc;
  acc.add(coeffs[0]);
  for (std::size_t i = 0; i + 1 < coeffs.size(); ++i)
    if (n[i] != 0) acc.add(coeffs[i + 1], static_cast<double>(n[i]));
  return acc.take();
}

void corner_reduce_cell(std::span<const AffineExpr> coeffs, const LatticeBox& box, std::size_t cell,
                        std::vector<LinearConstraint>& out) {
  auto cs = corners_and_unbounded(box);
  for (const auto& n : cs.corners) out.push_back({evaluate_at(coeffs, n), cell});
  for (std::size_t i : cs.unbounded) out.push_back({coeffs[i + 1], cell});
}

std::vector<LinearConstraint> corner_reduce(const SymbolicZLinear& e, const Refinement& refinement) {
  std::vector<LinearConstraint> out;
  for (std::size_t j = 0; j < refinement.size(); ++j)
    corner_reduce_cell(e.coef[j], refinement.cells().box(j), j, out);
  return out;
}

}  // namespace rwb
