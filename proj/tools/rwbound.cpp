#include <array>
#include <cmath>
#include <cstdio>
#include <exception>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rwb/bounds.hpp"
#include "rwb/errors.hpp"
#include "rwb/model.hpp"
#include "rwb/oracle.hpp"
#include "rwb/report.hpp"

namespace {

using namespace rwb;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInfeasible = 2;
constexpr double kBalanceTolerance = 1e-10;
constexpr std::int64_t kBalanceCap = 12;
constexpr std::size_t kOracleHorizon = 50;
constexpr double kSandwichTolerance = 1e-6;

constexpr std::array<BoundKind, 4> kAllKinds = {BoundKind::UpperError, BoundKind::LowerError,
                                                BoundKind::ComparisonUpper, BoundKind::ComparisonLower};

struct Options {
  std::string model;
  std::string performance;
  std::vector<std::string> sets;
  std::string kind = "all";
  std::vector<std::string> sweep;
  std::string csv;
  std::string svg;
  bool log_y = false;
  bool oracle = false;
  double tol = 1e-9;
  std::string backend = "builtin";
  std::string caps;
};

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

double parse_double(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw ModelError(what + ": \"" + text + "\" is not a number");
}

ParameterValues parse_sets(const std::vector<std::string>& sets) {
  ParameterValues values;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ModelError("--set expects name=value, got \"" + s + "\"");
    values[s.substr(0, eq)] = parse_double(s.substr(eq + 1), "--set " + s.substr(0, eq));
  }
  return values;
}

std::array<bool, 4> parse_kinds(const std::string& text) {
  if (text == "all") return {true, true, true, true};
  std::array<bool, 4> mask{};
  for (const auto& item : split(text, ',')) {
    const auto kind = parse_bound_kind(item);
    if (!kind) throw ModelError("unknown bound kind \"" + item + "\"");
    mask[static_cast<std::size_t>(*kind)] = true;
  }
  return mask;
}

std::string performance_name(const ModelFile& model, const Options& opt) {
  if (!opt.performance.empty()) {
    model.performance(opt.performance);
    return opt.performance;
  }
  if (model.performances.empty()) throw ModelError("model defines no performance function");
  return model.performances.front().name;
}

BoundSolveConfig solve_config(const Options& opt) {
  BoundSolveConfig config;
  config.lp.feasibility_tol = opt.tol;
  config.lp.optimality_tol = opt.tol;
  if (opt.backend == "external") {
    try {
      LPModel probe;
      probe.add_variable("x");
      probe.set_objective(Sense::Minimize, {{0, 1.0}});
      solve_lp_external(probe);
      config.backend = LPBackend::External;
    } catch (const AdapterUnavailable& e) {
      std::cerr << "warning: external backend unavailable (" << e.what() << "), using builtin\n";
    }
  }
  return config;
}

FlowConfig flow_config(const BoundSolveConfig& config) {
  FlowConfig fc;
  fc.lp = config.lp;
  fc.backend = config.backend;
  return fc;
}

std::string format_box(const LatticeBox& box) {
  std::ostringstream os;
  os << box;
  return os.str();
}

std::string format_law_row(const TransitionLaw& law, std::size_t k) {
  std::ostringstream os;
  os << std::setprecision(10);
  bool first = true;
  for (const auto& u : unit_steps(law.dim())) {
    const double p = law.get(k, u);
    if (p == 0.0) continue;
    if (!first) os << ' ';
    os << format_vector(u) << ':' << p;
    first = false;
  }
  return os.str();
}

struct KindResults {
  SandwichResult results;
  std::array<bool, 4> solved{};
};

KindResults solve_kinds(const BoundContext& context, const std::array<bool, 4>& mask,
                        const BoundSolveConfig& config) {
  KindResults out;
  BoundResult* slots[4] = {&out.results.upper, &out.results.lower, &out.results.comparison_upper,
                           &out.results.comparison_lower};
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < 4; ++t) {
    if (!mask[t]) continue;
    try {
      *slots[t] = solve_bound(kAllKinds[t], context, config);
    } catch (...) {
#pragma omp critical(rwbound_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  out.solved = mask;
  return out;
}

bool any_infeasible(const KindResults& r) {
  const BoundResult* slots[4] = {&r.results.upper, &r.results.lower, &r.results.comparison_upper,
                                 &r.results.comparison_lower};
  for (int t = 0; t < 4; ++t)
    if (r.solved[t] && slots[t]->status == LPStatus::Infeasible) return true;
  return false;
}

int cmd_validate(const Options& opt) {
  const ModelFile model = load_model(opt.model);
  const ModelInstance inst = instantiate(model, parse_sets(opt.sets));
  const std::size_t dim = inst.partition.dim();
  std::cout << "model " << model.name << "\n";
  std::cout << "dimension " << dim << "\n";
  std::cout << "components " << inst.partition.size() << "\n";
  for (std::size_t k = 0; k < inst.partition.size(); ++k) {
    std::cout << "  " << k << ' ' << inst.component_names[k] << ' ' << format_box(inst.partition.box(k)) << "\n";
    std::cout << "    original  " << format_law_row(inst.original.law, k) << "\n";
    std::cout << "    perturbed " << format_law_row(inst.perturbed.law, k) << "\n";
  }
  const PerturbationDelta d = delta(inst.original, inst.perturbed);
  std::cout << "perturbation " << (d.is_zero() ? "zero" : "nonzero") << "\n";

  double mass = 0.0;
  for (std::size_t k = 0; k < inst.partition.size(); ++k)
    mass += component_moments(*inst.measure, inst.partition, k).mass;
  std::cout << std::setprecision(12) << "measure mass " << mass << "\n";

  const std::vector<std::int64_t> caps(dim, kBalanceCap);
  const double balance = verify_balance(*inst.measure, inst.perturbed, grid_states(caps));
  std::cout << "balance residual " << balance << "\n";
  for (const auto& [name, f] : inst.performances) std::cout << "performance " << name << "\n";
  if (!(balance <= kBalanceTolerance)) {
    std::cerr << "error: balance residual " << balance << " exceeds " << kBalanceTolerance << "\n";
    return kExitError;
  }
  std::cout << "valid\n";
  return kExitOk;
}

int cmd_refine(const Options& opt) {
  const ModelInstance inst = instantiate(load_model(opt.model), parse_sets(opt.sets));
  const Refinement z = refine(inst.partition);
  std::cout << "cells " << z.size() << "\n";
  std::cout << "cell,component,box\n";
  for (std::size_t j = 0; j < z.size(); ++j)
    std::cout << j << ',' << inst.component_names[z.parent(j)] << ",\"" << format_box(z.cells().box(j)) << "\"\n";
  return kExitOk;
}

int cmd_flows(const Options& opt) {
  const ModelFile model = load_model(opt.model);
  const ModelInstance inst = instantiate(model, parse_sets(opt.sets));
  const BoundSolveConfig config = solve_config(opt);
  const Refinement z = refine(inst.partition);
  const FlowSolution flows = solve_all_flows(z, inst.original, flow_config(config));
  std::cout << "subproblems " << flows.entries().size() << "\n";
  std::cout << "variables " << flows.variable_count() << "\n";
  std::cout << std::setprecision(12) << "max_residual " << flows.max_residual() << "\n";
  std::cout << "cell,step,total,residual\n";
  for (const auto& e : flows.entries())
    std::cout << e.problem.cell << ",\"" << format_vector(e.problem.u) << "\"," << e.total << ',' << e.residual
              << "\n";
  return kExitOk;
}

int cmd_bounds(const Options& opt) {
  const ModelFile model = load_model(opt.model);
  const ModelInstance inst = instantiate(model, parse_sets(opt.sets));
  const std::string perf = performance_name(model, opt);
  const auto mask = parse_kinds(opt.kind);
  const BoundSolveConfig config = solve_config(opt);
  const BoundContext context = prepare_bounds(inst.bound_model(perf), flow_config(config));
  const KindResults r = solve_kinds(context, mask, config);
  const BoundResult* slots[4] = {&r.results.upper, &r.results.lower, &r.results.comparison_upper,
                                 &r.results.comparison_lower};
  std::cout << "model " << model.name << "\nperformance " << perf << "\n";
  for (int t = 0; t < 4; ++t) {
    if (!mask[t]) continue;
    std::cout << "\n";
    write_report(*slots[t], inst.partition, std::cout);
  }
  return any_infeasible(r) ? kExitInfeasible : kExitOk;
}

std::vector<std::int64_t> chain_caps(const ModelFile& model, const ModelInstance& inst, const Options& opt) {
  if (opt.caps.empty()) return inst.oracle_caps(model.tail);
  std::vector<std::int64_t> caps;
  for (const auto& c : split(opt.caps, ',')) caps.push_back(static_cast<std::int64_t>(parse_double(c, "--caps")));
  if (caps.size() == 1) caps.resize(inst.partition.dim(), caps.front());
  if (caps.size() != inst.partition.dim()) throw ModelError("--caps needs one value or one per dimension");
  for (auto c : caps)
    if (c < 1) throw ModelError("--caps values must be positive");
  return caps;
}

double oracle_value(const ModelFile& model, const ModelInstance& inst, const std::string& perf,
                    const Options& opt) {
  const TruncatedChain chain(inst.original, chain_caps(model, inst, opt));
  const StationaryResult st = stationary_exact(chain);
  return exact_performance(chain, st.pi, inst.performances.at(perf));
}

int cmd_sweep(const Options& opt) {
  const ModelFile model = load_model(opt.model);
  const std::string perf = performance_name(model, opt);
  const auto mask = parse_kinds(opt.kind);
  if (opt.sweep.size() != 2) throw ModelError("--sweep expects a parameter name and a value list");
  const std::string& param = opt.sweep[0];
  if (!model.has_parameter(param)) throw ModelError("unknown sweep parameter \"" + param + "\"");
  std::vector<double> values;
  for (const auto& v : split(opt.sweep[1], ',')) values.push_back(parse_double(v, "--sweep"));
  const ParameterValues base = parse_sets(opt.sets);
  const BoundSolveConfig config = solve_config(opt);

  std::vector<SweepPoint> points(values.size());
  std::vector<std::array<bool, 4>> solved(values.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < values.size(); ++i) {
    try {
      ParameterValues over = base;
      over[param] = values[i];
      const ModelInstance inst = instantiate(model, over);
      const BoundContext context = prepare_bounds(inst.bound_model(perf), flow_config(config));
      const KindResults r = solve_kinds(context, mask, config);
      points[i].value = values[i];
      points[i].bounds = r.results;
      solved[i] = r.solved;
      if (opt.oracle) points[i].oracle = oracle_value(model, inst, perf, opt);
    } catch (...) {
#pragma omp critical(rwbound_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);

  CsvTable table = sweep_table(param, points);
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t t = 0; t < 4; ++t)
      if (!mask[t]) table.rows[i][1 + t] = table.rows[i][5 + t] = "";
  const std::string csv = to_csv(table);
  if (opt.csv.empty())
    std::cout << csv;
  else
    write_text(opt.csv, csv);

  if (!opt.svg.empty()) {
    PlotSpec spec;
    spec.x = param;
    const char* columns[4] = {"F_u", "F_l", "F_u_c", "F_l_c"};
    for (int t = 0; t < 4; ++t)
      if (mask[t]) spec.y.push_back(columns[t]);
    if (opt.oracle) spec.y.push_back("F_oracle");
    spec.title = model.name + ": " + perf;
    spec.x_label = param;
    spec.y_label = perf;
    spec.log_y = opt.log_y;
    write_text(opt.svg, to_svg(table, spec));
  }

  bool infeasible = false;
  for (std::size_t i = 0; i < points.size(); ++i)
    infeasible = infeasible || any_infeasible(KindResults{points[i].bounds, solved[i]});
  return infeasible ? kExitInfeasible : kExitOk;
}

int cmd_oracle_check(const Options& opt) {
  const ModelFile model = load_model(opt.model);
  const ModelInstance inst = instantiate(model, parse_sets(opt.sets));
  const std::string perf = performance_name(model, opt);
  const BoundSolveConfig config = solve_config(opt);
  const auto caps = chain_caps(model, inst, opt);
  const CLinearFn& f = inst.performances.at(perf);

  const TruncatedChain chain(inst.original, caps);
  const StationaryResult st = stationary_exact(chain);
  const double value = exact_performance(chain, st.pi, f);
  std::cout << std::setprecision(12);
  std::cout << "caps " << format_vector(caps) << "\n";
  std::cout << "states " << chain.size() << "\n";
  std::cout << "absorbing_states " << st.support.size() << "\n";
  std::cout << "row_sum_deviation " << chain.row_sum_deviation() << "\n";
  std::cout << "stationary_residual " << st.residual << "\n";
  std::cout << "measure_tail " << measure_tail(*inst.measure, inst.partition, caps) << "\n";
  std::cout << "oracle " << value << "\n";

  const BoundContext context = prepare_bounds(inst.bound_model(perf), flow_config(config));
  const RewardTrace trace = iterate_rewards(chain, f, kOracleHorizon);
  const auto points = interior_identity_points(chain, context.refinement);
  std::cout << "flow_identity_points " << points.size() << "\n";
  std::cout << "flow_identity_residual " << check_flow_identity(context.flows, context.refinement, chain, trace, points)
            << "\n";

  const KindResults r = solve_kinds(context, {true, true, true, true}, config);
  const TruncatedChain perturbed(inst.perturbed, caps);
  std::vector<double> pibar(perturbed.size());
  for (std::size_t s = 0; s < perturbed.size(); ++s) pibar[s] = point_mass(*inst.measure, inst.partition, perturbed.state(s));

  bool ok = true;
  const auto check = [&](const BoundResult& b, bool upper) {
    std::cout << to_string(b.kind) << ' ' << status_token(b);
    if (b.optimal()) {
      const double margin = upper ? b.value - value : value - b.value;
      const bool holds = margin >= -kSandwichTolerance;
      ok = ok && holds;
      std::cout << ' ' << b.value << " margin " << margin << (holds ? " ok" : " VIOLATED");
      std::cout << " replay " << replay_certificate(context, b);
      if (b.kind == BoundKind::UpperError || b.kind == BoundKind::LowerError) {
        const auto rep = check_reward_inequality(chain, perturbed, pibar, f, b.certificate.fbar, b.certificate.g,
                                                 kOracleHorizon);
        std::cout << " reward_inequality " << rep.aggregate;
      }
    }
    std::cout << "\n";
  };
  check(r.results.upper, true);
  check(r.results.lower, false);
  check(r.results.comparison_upper, true);
  check(r.results.comparison_lower, false);
  if (!ok) {
    std::cerr << "error: a bound does not contain the oracle value\n";
    return kExitError;
  }
  return any_infeasible(r) ? kExitInfeasible : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified bounds on stationary performance measures of random walks in the orthant"};
  app.require_subcommand(1);
  Options opt;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("model", opt.model, "Model file")->required()->check(CLI::ExistingFile);
    sub->add_option("--set", opt.sets, "Override a parameter, name=value (repeatable)");
    sub->add_option("--tol", opt.tol, "LP feasibility and optimality tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--backend", opt.backend, "LP backend")->check(CLI::IsMember({"builtin", "external"}));
  };
  const auto add_perf = [&](CLI::App* sub) {
    sub->add_option("--perf", opt.performance, "Performance function (default: the first one in the file)");
  };
  const auto add_caps = [&](CLI::App* sub) {
    sub->add_option("--caps", opt.caps, "Oracle truncation caps c1,c2,... (default: from the model file)");
  };

  auto* validate = app.add_subcommand("validate", "Check partition, walks and measure");
  add_common(validate);
  auto* refine_cmd = app.add_subcommand("refine", "Print the canonical refinement");
  add_common(refine_cmd);
  auto* flows = app.add_subcommand("flows", "Solve all flow subproblems");
  add_common(flows);
  auto* bounds = app.add_subcommand("bounds", "Solve the bound LPs");
  add_common(bounds);
  add_perf(bounds);
  bounds->add_option("--kind", opt.kind, "upper, lower, cmp-upper, cmp-lower, a comma list, or all");
  auto* sweep = app.add_subcommand("sweep", "Solve the bound LPs over a parameter sweep");
  add_common(sweep);
  add_perf(sweep);
  add_caps(sweep);
  sweep->add_option("--kind", opt.kind, "upper, lower, cmp-upper, cmp-lower, a comma list, or all");
  sweep->add_option("--sweep", opt.sweep, "Parameter name and comma-separated values")->expected(2)->required();
  sweep->add_option("--csv", opt.csv, "CSV output path (default: stdout)");
  sweep->add_option("--svg", opt.svg, "SVG chart output path");
  sweep->add_flag("--logy", opt.log_y, "Logarithmic y-axis");
  sweep->add_flag("--oracle", opt.oracle, "Add the truncated-chain value as a column");
  auto* oracle = app.add_subcommand("oracle-check", "Compare the bounds with the truncated-chain oracle");
  add_common(oracle);
  add_perf(oracle);
  add_caps(oracle);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (validate->parsed()) return cmd_validate(opt);
    if (refine_cmd->parsed()) return cmd_refine(opt);
    if (flows->parsed()) return cmd_flows(opt);
    if (bounds->parsed()) return cmd_bounds(opt);
    if (sweep->parsed()) return cmd_sweep(opt);
    if (oracle->parsed()) return cmd_oracle_check(opt);
  } catch (const rwb::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
