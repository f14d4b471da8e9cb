#include "rwb/oracle.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>

#include "rwb/errors.hpp"

namespace rwb {

TruncatedChain::TruncatedChain(const RandomWalkSpec& walk, std::vector<std::int64_t> caps)
    : caps_(std::move(caps)), partition_(walk.partition) {
  const std::size_t dim = walk.partition.dim();
  if (caps_.size() != dim) throw ModelError("caps must have one entry per dimension");
  std::size_t count = 1;
  for (auto c : caps_) {
    if (c < 1) throw ModelError("caps must be positive");
    strides_.push_back(count);
    count *= static_cast<std::size_t>(c + 1);
  }
  const auto steps = unit_steps(dim);
  row_ptr_.reserve(count + 1);
  row_ptr_.push_back(0);
  State n(dim, 0);
  State m(dim);
  std::vector<std::pair<std::size_t, double>> row;
  for (std::size_t s = 0; s < count; ++s) {
    const std::size_t k = walk.partition.locate(n);
    row.clear();
    double self = 0.0;
    for (const auto& u : steps) {
      const double p = walk.law.get(k, u);
      if (p == 0.0) continue;
      bool inside = true;
      for (std::size_t i = 0; i < dim; ++i) {
        m[i] = n[i] + u[i];
        if (m[i] > caps_[i] || m[i] < 0) inside = false;
      }
      if (!inside || is_zero(u)) {
        self += p;
        continue;
      }
      row.emplace_back(index(m), p);
    }
    if (self > 0.0) row.emplace_back(s, self);
    std::sort(row.begin(), row.end());
    for (const auto& [c, p] : row) {
      cols_.push_back(c);
      values_.push_back(p);
    }
    row_ptr_.push_back(cols_.size());
    for (std::size_t i = 0; i < dim; ++i) {
      if (++n[i] <= caps_[i]) break;
      n[i] = 0;
    }
  }
}

State TruncatedChain::state(std::size_t index) const {
  State n(dim());
  for (std::size_t i = 0; i < dim(); ++i) {
    n[i] = static_cast<std::int64_t>(index % static_cast<std::size_t>(caps_[i] + 1));
    index /= static_cast<std::size_t>(caps_[i] + 1);
  }
  return n;
}

std::size_t TruncatedChain::index(std::span<const std::int64_t> n) const {
  std::size_t s = 0;
  for (std::size_t i = 0; i < dim(); ++i) {
    if (n[i] < 0 || n[i] > caps_[i]) return kNone;
    s += static_cast<std::size_t>(n[i]) * strides_[i];
  }
  return s;
}

double TruncatedChain::probability(std::size_t from, std::size_t to) const {
  for (std::size_t e = row_ptr_[from]; e < row_ptr_[from + 1]; ++e)
    if (cols_[e] == to) return values_[e];
  return 0.0;
}

void TruncatedChain::apply(std::span<const double> x, std::span<double> y) const {
  const auto rows = static_cast<std::ptrdiff_t>(size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    const auto s = static_cast<std::size_t>(r);
    double acc = 0.0;
    for (std::size_t e = row_ptr_[s]; e < row_ptr_[s + 1]; ++e) acc += values_[e] * x[cols_[e]];
    y[s] = acc;
  }
}

void TruncatedChain::apply_serial(std::span<const double> x, std::span<double> y) const {
  for (std::size_t s = 0; s < size(); ++s) {
    double acc = 0.0;
    for (std::size_t e = row_ptr_[s]; e < row_ptr_[s + 1]; ++e) acc += values_[e] * x[cols_[e]];
    y[s] = acc;
  }
}

double TruncatedChain::row_sum_deviation() const {
  double worst = 0.0;
  for (std::size_t s = 0; s < size(); ++s) {
    double sum = 0.0;
    for (std::size_t e = row_ptr_[s]; e < row_ptr_[s + 1]; ++e) sum += values_[e];
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  return worst;
}

std::vector<std::vector<std::size_t>> closed_classes(const TruncatedChain& chain) {
  const std::size_t n = chain.size();
  const auto& ptr = chain.row_ptr();
  const auto& cols = chain.cols();
  const auto& vals = chain.values();

  // Iterative Tarjan.
  std::vector<std::size_t> order(n, kNone), low(n, 0), comp(n, kNone);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::pair<std::size_t, std::size_t>> call;
  std::size_t counter = 0;
  std::size_t components = 0;
  for (std::size_t root = 0; root < n; ++root) {
    if (order[root] != kNone) continue;
    call.emplace_back(root, ptr[root]);
    order[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      auto& [v, e] = call.back();
      if (e < ptr[v + 1]) {
        const std::size_t w = cols[e];
        const double p = vals[e];
        ++e;
        if (p <= 0.0 || w == v) continue;
        if (order[w] == kNone) {
          order[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          call.emplace_back(w, ptr[w]);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], order[w]);
        }
        continue;
      }
      const std::size_t done = v;
      call.pop_back();
      if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[done]);
      if (low[done] == order[done]) {
        while (true) {
          const std::size_t w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = components;
          if (w == done) break;
        }
        ++components;
      }
    }
  }

  std::vector<bool> closed(components, true);
  for (std::size_t v = 0; v < n; ++v)
    for (std::size_t e = ptr[v]; e < ptr[v + 1]; ++e)
      if (vals[e] > 0.0 && comp[cols[e]] != comp[v]) closed[comp[v]] = false;
  std::vector<std::size_t> slot(components, kNone);
  std::vector<std::vector<std::size_t>> classes;
  for (std::size_t v = 0; v < n; ++v) {
    if (!closed[comp[v]]) continue;
    if (slot[comp[v]] == kNone) {
      slot[comp[v]] = classes.size();
      classes.emplace_back();
    }
    classes[slot[comp[v]]].push_back(v);
  }
  return classes;
}

double stationary_residual(const TruncatedChain& chain, std::span<const double> pi) {
  std::vector<double> next(chain.size(), 0.0);
  const auto& ptr = chain.row_ptr();
  for (std::size_t s = 0; s < chain.size(); ++s)
    for (std::size_t e = ptr[s]; e < ptr[s + 1]; ++e) next[chain.cols()[e]] += pi[s] * chain.values()[e];
  double worst = 0.0;
  for (std::size_t s = 0; s < chain.size(); ++s) worst = std::max(worst, std::abs(next[s] - pi[s]));
  return worst;
}

StationaryResult stationary_exact(const TruncatedChain& chain) {
  auto classes = closed_classes(chain);
  if (classes.size() != 1) throw MultipleAbsorbingClasses(classes.size());
  StationaryResult result;
  result.support = std::move(classes.front());
  const auto& support = result.support;
  const std::size_t m = support.size();
  std::vector<std::size_t> local(chain.size(), kNone);
  for (std::size_t i = 0; i < m; ++i) local[support[i]] = i;

  // (P_CC^T - I) pi = 0 with the first equation replaced by pi_first = 1; the
  // first support state is the one nearest the origin, where the mass sits.
  using SpMat = Eigen::SparseMatrix<double>;
  std::vector<Eigen::Triplet<double>> triplets;
  const auto& ptr = chain.row_ptr();
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t s = support[i];
    for (std::size_t e = ptr[s]; e < ptr[s + 1]; ++e) {
      const std::size_t j = local[chain.cols()[e]];
      if (j == kNone || j == 0) continue;
      triplets.emplace_back(static_cast<int>(j), static_cast<int>(i), chain.values()[e]);
    }
    triplets.emplace_back(static_cast<int>(i), static_cast<int>(i), i == 0 ? 1.0 : -1.0);
  }
  SpMat a(static_cast<int>(m), static_cast<int>(m));
  a.setFromTriplets(triplets.begin(), triplets.end());
  a.makeCompressed();
  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) throw NumericalFailure("stationary factorization failed", 0.0);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
  rhs(0) = 1.0;
  Eigen::VectorXd x = lu.solve(rhs);
  for (int pass = 0; pass < 2; ++pass) {
    const Eigen::VectorXd r = rhs - a * x;
    x += lu.solve(r);
  }

  result.pi.assign(chain.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double v = std::max(0.0, x(static_cast<Eigen::Index>(i)));
    result.pi[support[i]] = v;
    total += v;
  }
  for (double& v : result.pi) v /= total;
  result.residual = stationary_residual(chain, result.pi);
  return result;
}

std::vector<double> reward_vector(const TruncatedChain& chain, const CLinearFn& f) {
  std::vector<double> r(chain.size());
  for (std::size_t s = 0; s < chain.size(); ++s) r[s] = evaluate(f, chain.partition(), chain.state(s));
  return r;
}

double exact_performance(const TruncatedChain& chain, std::span<const double> pi, const CLinearFn& f) {
  const auto r = reward_vector(chain, f);
  double acc = 0.0;
  for (std::size_t s = 0; s < chain.size(); ++s) acc += pi[s] * r[s];
  return acc;
}

namespace {

template <bool Parallel>
RewardTrace run_rewards(const TruncatedChain& chain, std::span<const double> reward, std::size_t horizon) {
  const std::size_t n = chain.size();
  std::vector<std::vector<double>> values;
  values.reserve(horizon + 1);
  values.emplace_back(n, 0.0);
  std::vector<double> next(n);
  for (std::size_t t = 0; t < horizon; ++t) {
    if constexpr (Parallel)
      chain.apply(values.back(), next);
    else
      chain.apply_serial(values.back(), next);
    for (std::size_t s = 0; s < n; ++s) next[s] += reward[s];
    values.push_back(next);
  }
  return RewardTrace(std::vector<double>(reward.begin(), reward.end()), std::move(values));
}

}  // namespace

RewardTrace iterate_rewards(const TruncatedChain& chain, std::span<const double> reward, std::size_t horizon) {
  return run_rewards<true>(chain, reward, horizon);
}

RewardTrace iterate_rewards_serial(const TruncatedChain& chain, std::span<const double> reward,
                                   std::size_t horizon) {
  return run_rewards<false>(chain, reward, horizon);
}

RewardTrace iterate_rewards(const TruncatedChain& chain, const CLinearFn& f, std::size_t horizon) {
  return iterate_rewards(chain, reward_vector(chain, f), horizon);
}

double measure_tail(const StationaryMeasure& measure, const Partition& partition,
                    std::span<const std::int64_t> caps) {
  double total = 0.0;
  for (std::size_t k = 0; k < partition.size(); ++k) total += measure.component_moments(partition, k).mass;
  double inside = 0.0;
  for (const auto& n : grid_states(caps)) inside += measure.point_mass(partition, n);
  return std::max(0.0, 1.0 - inside / total);
}

std::int64_t cap_for_tail(const StationaryMeasure& measure, const Partition& partition, double tail,
                          std::int64_t max_cap) {
  double total = 0.0;
  for (std::size_t k = 0; k < partition.size(); ++k) total += measure.component_moments(partition, k).mass;
  const std::size_t dim = partition.dim();
  // Mass of the box grows shell by shell as the cap increases.
  std::int64_t floor_cap = 1;
  for (const auto& box : partition.boxes())
    for (std::size_t i = 0; i < dim; ++i)
      if (box.bounded(i)) floor_cap = std::max(floor_cap, box.upper[i] + 1);
  for (std::int64_t cap = floor_cap; cap <= max_cap; ++cap) {
    const std::vector<std::int64_t> caps(dim, cap);
    double inside = 0.0;
    for (const auto& n : grid_states(caps)) inside += measure.point_mass(partition, n);
    if (1.0 - inside / total <= tail) return cap;
  }
  throw ModelError("no cap up to " + std::to_string(max_cap) + " reaches the requested tail");
}

bool interior(const TruncatedChain& chain, std::span<const std::int64_t> n, std::int64_t margin) {
  for (std::size_t i = 0; i < chain.dim(); ++i)
    if (n[i] + margin > chain.caps()[i]) return false;
  return true;
}

double check_flow_identity(const FlowSolution& flows, const Refinement& refinement, const TruncatedChain& chain,
                           const RewardTrace& trace, std::span<const FlowIdentityPoint> points) {
  const std::size_t dim = chain.dim();
  const auto steps = unit_steps(dim);
  double worst = 0.0;
  for (const auto& point : points) {
    const auto& n = point.n;
    State nu(dim);
    for (std::size_t i = 0; i < dim; ++i) nu[i] = n[i] + point.u[i];
    const std::size_t sn = chain.index(n);
    const std::size_t snu = chain.index(nu);
    if (sn == kNone || snu == kNone) throw ModelError("flow identity point outside the chain");

    struct Term {
      std::size_t from;
      std::size_t to;
      double phi;
    };
    std::vector<Term> terms;
    State m(dim), mv(dim);
    const std::size_t window = offset_space(dim);
    for (std::size_t code = 0; code < window; ++code) {
      const Step d = decode_offset(code, dim);
      bool ok = true;
      for (std::size_t i = 0; i < dim; ++i) {
        m[i] = n[i] + d[i];
        if (m[i] < 0) ok = false;
      }
      if (!ok) continue;
      for (const auto& v : steps) {
        const double phi = phi_lookup(flows, refinement, n, point.u, m, v);
        if (phi == 0.0) continue;
        for (std::size_t i = 0; i < dim; ++i) mv[i] = m[i] + v[i];
        const std::size_t a = chain.index(m);
        const std::size_t b = chain.index(mv);
        if (a == kNone || b == kNone) throw ModelError("flow identity point too close to the caps");
        terms.push_back({a, b, phi});
      }
    }
    const double df = trace.reward()[snu] - trace.reward()[sn];
    for (std::size_t t = 0; t < trace.horizon(); ++t) {
      double rhs = df;
      for (const auto& term : terms) rhs += term.phi * trace.bias(t, term.from, term.to);
      worst = std::max(worst, std::abs(trace.bias(t + 1, sn, snu) - rhs));
    }
  }
  return worst;
}

std::vector<FlowIdentityPoint> interior_identity_points(const TruncatedChain& chain, const Refinement& z) {
  std::vector<FlowIdentityPoint> points;
  const std::size_t dim = chain.dim();
  for (std::size_t j = 0; j < z.size(); ++j) {
    const LatticeBox& box = z.cells().box(j);
    State n(dim);
    for (std::size_t i = 0; i < dim; ++i) n[i] = box.bounded(i) ? box.upper[i] : box.lower[i] + 2;
    if (!interior(chain, n)) continue;
    for (const auto& u : unit_steps(dim))
      if (!is_zero(u) && box.admits(u)) points.push_back({n, u});
  }
  return points;
}

RewardInequalityReport check_reward_inequality(const TruncatedChain& original, const TruncatedChain& perturbed,
                                               std::span<const double> pibar, const CLinearFn& f,
                                               const CLinearFn& fbar, const CLinearFn& g, std::size_t horizon) {
  if (original.size() != perturbed.size() || original.caps() != perturbed.caps())
    throw ModelError("chains must share the same caps");
  const auto fv = reward_vector(original, f);
  const auto fbv = reward_vector(perturbed, fbar);
  const auto gv = reward_vector(original, g);
  const RewardTrace trace = iterate_rewards(original, fv, horizon);
  const RewardTrace trace_bar = iterate_rewards(perturbed, fbv, horizon);
  const std::size_t n = original.size();

  double pig = 0.0;
  for (std::size_t s = 0; s < n; ++s) pig += pibar[s] * gv[s];

  RewardInequalityReport report;
  report.aggregate = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 1; t <= horizon; ++t) {
    double diff = 0.0;
    for (std::size_t s = 0; s < n; ++s) diff += pibar[s] * (trace_bar.at(t)[s] - trace.at(t)[s]);
    report.aggregate = std::max(report.aggregate, std::abs(diff) - static_cast<double>(t) * pig);
  }

  // Pointwise condition on the inner half of the box, where the truncation
  // has little influence on F^t.
  report.pointwise = -std::numeric_limits<double>::infinity();
  const auto& ptr = original.row_ptr();
  const auto& pptr = perturbed.row_ptr();
  for (std::size_t s = 0; s < n; ++s) {
    const State st = original.state(s);
    bool inner = true;
    for (std::size_t i = 0; i < st.size(); ++i)
      if (2 * st[i] > original.caps()[i]) inner = false;
    if (!inner) continue;
    for (std::size_t t = 0; t < horizon; ++t) {
      double acc = fbv[s] - fv[s];
      for (std::size_t e = pptr[s]; e < pptr[s + 1]; ++e)
        acc += perturbed.values()[e] * trace.bias(t, s, perturbed.cols()[e]);
      for (std::size_t e = ptr[s]; e < ptr[s + 1]; ++e)
        acc -= original.values()[e] * trace.bias(t, s, original.cols()[e]);
      report.pointwise = std::max(report.pointwise, std::abs(acc) - gv[s]);
    }
  }
  return report;
}

}  // namespace rwb
