#include "rwb/model.hpp"

#include <json.hpp>

#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "rwb/errors.hpp"
#include "rwb/oracle.hpp"

namespace rwb {

namespace {

using Json = nlohmann::ordered_json;
using Resolver = std::function<double(const std::string&)>;

class ExpressionParser {
 public:
  ExpressionParser(std::string_view text, const Resolver& resolve) : text_(text), resolve_(resolve) {}

  double parse() {
    const double v = sum();
    skip();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ModelError("expression \"" + std::string(text_) + "\": " + what + " at position " +
                     std::to_string(pos_));
  }

  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  double sum() {
    double v = product();
    while (true) {
      if (accept('+'))
        v += product();
      else if (accept('-'))
        v -= product();
      else
        return v;
    }
  }

  double product() {
    double v = unary();
    while (true) {
      if (accept('*')) {
        v *= unary();
      } else if (accept('/')) {
        const double d = unary();
        if (d == 0.0) fail("division by zero");
        v /= d;
      } else {
        return v;
      }
    }
  }

  double unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return power();
  }

  double power() {
    const double base = atom();
    if (accept('^')) return std::pow(base, unary());
    return base;
  }

  double atom() {
    skip();
    if (pos_ >= text_.size()) fail("unexpected end");
    if (accept('(')) {
      const double v = sum();
      if (!accept(')')) fail("missing ')'");
      return v;
    }
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const std::string rest(text_.substr(pos_));
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(rest, &used);
      } catch (const std::exception&) {
        fail("malformed number");
      }
      pos_ += used;
      return v;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        ++pos_;
      return resolve_(std::string(text_.substr(start, pos_ - start)));
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  std::string_view text_;
  const Resolver& resolve_;
  std::size_t pos_ = 0;
};

double evaluate_with(std::string_view text, const Resolver& resolve) {
  return ExpressionParser(text, resolve).parse();
}

std::string scalar_text(const Json& j, const std::string& where) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number()) return j.dump();
  throw ModelError(where + ": expected a number or an expression string");
}

std::vector<std::string> scalar_list(const Json& j, const std::string& where) {
  if (!j.is_array()) throw ModelError(where + ": expected an array");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(scalar_text(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

Step parse_step(const std::string& key, std::size_t dim, const std::string& where) {
  Step s;
  std::stringstream ss(key);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
      if (used != item.size() || v < -1 || v > 1) throw ModelError("");
      s.push_back(v);
    } catch (const std::exception&) {
      throw ModelError(where + ": step \"" + key + "\" must list " + std::to_string(dim) +
                       " entries in {-1,0,1}");
    }
  }
  if (s.size() != dim)
    throw ModelError(where + ": step \"" + key + "\" must list " + std::to_string(dim) + " entries in {-1,0,1}");
  return s;
}

std::string step_key(const Step& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(s[i]);
  }
  return out;
}

std::vector<std::pair<Step, std::string>> parse_entries(const Json& j, std::size_t dim, const std::string& where) {
  if (!j.is_object()) throw ModelError(where + ": expected an object of step entries");
  std::vector<std::pair<Step, std::string>> out;
  for (const auto& [key, value] : j.items()) out.emplace_back(parse_step(key, dim, where), scalar_text(value, where + "." + key));
  return out;
}

const Json& require(const Json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ModelError(where + ": missing \"" + key + "\"");
  return j.at(key);
}

std::int64_t to_bound(const std::string& text, const Resolver& resolve, const std::string& where) {
  if (text == "inf") return kUnbounded;
  const double v = evaluate_with(text, resolve);
  const double r = std::round(v);
  if (std::abs(v - r) > 1e-9 || r < 0) throw ModelError(where + ": bound \"" + text + "\" is not a nonnegative integer");
  return static_cast<std::int64_t>(r);
}

}  // namespace

double evaluate_expression(std::string_view text, const ParameterValues& values) {
  const Resolver resolve = [&](const std::string& name) {
    const auto it = values.find(name);
    if (it == values.end()) throw ModelError("unknown parameter \"" + name + "\"");
    return it->second;
  };
  return evaluate_with(text, resolve);
}

bool ModelFile::has_parameter(std::string_view name) const {
  for (const auto& [n, e] : parameters)
    if (n == name) return true;
  return false;
}

const PerformanceSpec& ModelFile::performance(std::string_view name) const {
  for (const auto& p : performances)
    if (p.name == name) return p;
  throw ModelError("unknown performance function \"" + std::string(name) + "\"");
}

namespace {

ModelFile parse_model_json(const Json& j);

}  // namespace

ModelFile parse_model(const std::string& json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("malformed model file: ") + e.what());
  }
  if (!j.is_object()) throw ModelError("model file must be an object");
  try {
    return parse_model_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("wrong value type in model file: ") + e.what());
  }
}

namespace {

ModelFile parse_model_json(const Json& j) {
  ModelFile m;
  m.name = j.value("name", "");
  m.description = j.value("description", "");
  const Json& dim = require(j, "dimension", "model");
  if (!dim.is_number_integer() || dim.get<int>() < 1 || dim.get<std::size_t>() > kMaxDimension)
    throw ModelError("dimension must be an integer in 1.." + std::to_string(kMaxDimension));
  m.dim = dim.get<std::size_t>();

  if (j.contains("parameters")) {
    if (!j["parameters"].is_object()) throw ModelError("parameters: expected an object");
    for (const auto& [name, value] : j["parameters"].items())
      m.parameters.emplace_back(name, scalar_text(value, "parameters." + name));
  }
  if (j.contains("uniformization")) m.uniformization = scalar_text(j["uniformization"], "uniformization");

  const Json& comps = require(j, "components", "model");
  if (!comps.is_array() || comps.empty()) throw ModelError("components: expected a non-empty array");
  std::set<std::string> names;
  for (std::size_t k = 0; k < comps.size(); ++k) {
    const Json& c = comps[k];
    const std::string where = "components[" + std::to_string(k) + "]";
    if (!c.is_object()) throw ModelError(where + ": expected an object");
    ComponentSpec spec;
    spec.name = c.value("name", "C" + std::to_string(k));
    if (!names.insert(spec.name).second) throw ModelError(where + ": duplicate name \"" + spec.name + "\"");
    spec.lower = scalar_list(require(c, "lower", where), where + ".lower");
    spec.upper = scalar_list(require(c, "upper", where), where + ".upper");
    if (spec.lower.size() != m.dim || spec.upper.size() != m.dim)
      throw ModelError(where + ": lower and upper need " + std::to_string(m.dim) + " entries");
    spec.optional = c.value("optional", false);
    spec.original = parse_entries(require(c, "original", where), m.dim, where + ".original");
    spec.perturbed = c.contains("perturbed") ? parse_entries(c["perturbed"], m.dim, where + ".perturbed") : spec.original;
    if (c.contains("weight")) spec.weight = scalar_text(c["weight"], where + ".weight");
    spec.ratios = scalar_list(require(c, "ratios", where), where + ".ratios");
    if (spec.ratios.size() != m.dim) throw ModelError(where + ".ratios: need " + std::to_string(m.dim) + " entries");
    m.components.push_back(std::move(spec));
  }

  if (j.contains("performances")) {
    if (!j["performances"].is_object()) throw ModelError("performances: expected an object");
    for (const auto& [name, p] : j["performances"].items()) {
      const std::string where = "performances." + name;
      PerformanceSpec spec;
      spec.name = name;
      spec.nonneg = p.value("nonneg", false);
      spec.fallback = p.contains("default") ? scalar_list(p["default"], where + ".default")
                                            : std::vector<std::string>(m.dim + 1, "0");
      if (spec.fallback.size() != m.dim + 1) throw ModelError(where + ".default: need " + std::to_string(m.dim + 1) + " entries");
      if (p.contains("rows")) {
        if (!p["rows"].is_object()) throw ModelError(where + ".rows: expected an object");
        for (const auto& [comp, row] : p["rows"].items()) {
          if (!names.count(comp)) throw ModelError(where + ".rows: unknown component \"" + comp + "\"");
          auto r = scalar_list(row, where + ".rows." + comp);
          if (r.size() != m.dim + 1) throw ModelError(where + ".rows." + comp + ": need " + std::to_string(m.dim + 1) + " entries");
          spec.rows.emplace_back(comp, std::move(r));
        }
      }
      m.performances.push_back(std::move(spec));
    }
  }
  if (j.contains("caps")) {
    m.caps = scalar_list(j["caps"], "caps");
    if (m.caps.size() != m.dim) throw ModelError("caps: need " + std::to_string(m.dim) + " entries");
  }
  if (j.contains("tail")) {
    if (!j["tail"].is_number() || j["tail"].get<double>() <= 0.0) throw ModelError("tail: expected a positive number");
    m.tail = j["tail"].get<double>();
  }
  return m;
}

}  // namespace

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

std::string serialize_model(const ModelFile& m) {
  Json j;
  if (!m.name.empty()) j["name"] = m.name;
  if (!m.description.empty()) j["description"] = m.description;
  j["dimension"] = m.dim;
  j["parameters"] = Json::object();
  for (const auto& [n, e] : m.parameters) j["parameters"][n] = e;
  if (!m.uniformization.empty()) j["uniformization"] = m.uniformization;
  j["components"] = Json::array();
  for (const auto& c : m.components) {
    Json cj;
    cj["name"] = c.name;
    cj["lower"] = c.lower;
    cj["upper"] = c.upper;
    if (c.optional) cj["optional"] = true;
    cj["original"] = Json::object();
    for (const auto& [s, e] : c.original) cj["original"][step_key(s)] = e;
    cj["perturbed"] = Json::object();
    for (const auto& [s, e] : c.perturbed) cj["perturbed"][step_key(s)] = e;
    cj["weight"] = c.weight;
    cj["ratios"] = c.ratios;
    j["components"].push_back(std::move(cj));
  }
  j["performances"] = Json::object();
  for (const auto& p : m.performances) {
    Json pj;
    pj["nonneg"] = p.nonneg;
    pj["default"] = p.fallback;
    pj["rows"] = Json::object();
    for (const auto& [c, r] : p.rows) pj["rows"][c] = r;
    j["performances"][p.name] = std::move(pj);
  }
  if (!m.caps.empty()) j["caps"] = m.caps;
  j["tail"] = m.tail;
  return j.dump(2) + "\n";
}

BoundModel ModelInstance::bound_model(const std::string& performance) const {
  const auto it = performances.find(performance);
  if (it == performances.end()) throw ModelError("unknown performance function \"" + performance + "\"");
  return BoundModel{original, perturbed, measure, it->second, nonneg.at(performance)};
}

std::vector<std::int64_t> ModelInstance::oracle_caps(double tail) const {
  if (!caps.empty()) return caps;
  const std::int64_t cap = cap_for_tail(*measure, partition, tail);
  return std::vector<std::int64_t>(partition.dim(), cap);
}

ModelInstance instantiate(const ModelFile& model, const ParameterValues& overrides) {
  for (const auto& [name, v] : overrides)
    if (!model.has_parameter(name)) throw ModelError("unknown parameter \"" + name + "\"");

  ModelInstance inst;
  std::map<std::string, std::string> exprs(model.parameters.begin(), model.parameters.end());
  std::set<std::string> active;
  Resolver resolve = [&](const std::string& name) -> double {
    if (const auto it = inst.values.find(name); it != inst.values.end()) return it->second;
    if (const auto it = overrides.find(name); it != overrides.end()) return inst.values[name] = it->second;
    const auto e = exprs.find(name);
    if (e == exprs.end()) throw ModelError("unknown parameter \"" + name + "\"");
    if (!active.insert(name).second) throw ModelError("parameter \"" + name + "\" depends on itself");
    const double v = evaluate_with(e->second, resolve);
    active.erase(name);
    return inst.values[name] = v;
  };
  for (const auto& [name, e] : model.parameters) resolve(name);

  const std::size_t dim = model.dim;
  double constant = 1.0;
  const bool rates = !model.uniformization.empty();
  if (rates) constant = evaluate_with(model.uniformization, resolve);

  std::vector<LatticeBox> boxes;
  std::vector<StepMap> original, perturbed;
  std::vector<double> weights;
  std::vector<std::vector<double>> ratios;
  for (std::size_t k = 0; k < model.components.size(); ++k) {
    const auto& c = model.components[k];
    const std::string where = "component " + c.name;
    std::vector<std::int64_t> lo(dim), hi(dim);
    bool empty = false;
    for (std::size_t i = 0; i < dim; ++i) {
      lo[i] = to_bound(c.lower[i], resolve, where);
      hi[i] = to_bound(c.upper[i], resolve, where);
      if (lo[i] == kUnbounded) throw ModelError(where + ": lower bound cannot be inf");
      if (lo[i] > hi[i]) empty = true;
    }
    if (empty && c.optional) continue;
    boxes.push_back(LatticeBox::make(lo, hi));
    inst.component_names.push_back(c.name);
    for (auto [entries, target] : {std::pair{&c.original, &original}, std::pair{&c.perturbed, &perturbed}}) {
      StepMap row;
      for (const auto& [step, expr] : *entries) {
        if (rates && is_zero(step)) throw ModelError(where + ": the self-loop is implied by uniformization");
        const double v = evaluate_with(expr, resolve);
        if (v != 0.0) row[step] += v;
      }
      target->push_back(std::move(row));
    }
    weights.push_back(evaluate_with(c.weight, resolve));
    std::vector<double> r;
    for (const auto& e : c.ratios) r.push_back(evaluate_with(e, resolve));
    ratios.push_back(std::move(r));
  }

  inst.partition = validate_partition(boxes, dim);
  const auto make = [&](std::vector<StepMap> rows) {
    if (rates) return uniformize(rows, constant, dim);
    const Step zero(dim, 0);
    for (auto& row : rows) {
      if (row.count(zero)) continue;
      double total = 0.0;
      for (const auto& [s, p] : row) total += p;
      row[zero] = 1.0 - total;
    }
    return make_law(rows, dim);
  };
  inst.original = validate_walk(inst.partition, make(original));
  inst.perturbed = validate_walk(inst.partition, make(perturbed));
  inst.measure =
      std::make_shared<GeometricStationaryMeasure>(normalize(GeometricStationaryMeasure(weights, ratios), inst.partition));

  std::map<std::string, std::size_t> slot;
  for (std::size_t k = 0; k < inst.component_names.size(); ++k) slot[inst.component_names[k]] = k;
  for (const auto& p : model.performances) {
    CLinearFn f = CLinearFn::zero(inst.partition.size(), dim);
    std::vector<double> fallback;
    for (const auto& e : p.fallback) fallback.push_back(evaluate_with(e, resolve));
    for (auto& row : f.coef) row = fallback;
    for (const auto& [comp, row] : p.rows) {
      const auto it = slot.find(comp);
      if (it == slot.end()) continue;  // an optional component that was dropped
      for (std::size_t i = 0; i <= dim; ++i) f.coef[it->second][i] = evaluate_with(row[i], resolve);
    }
    inst.performances[p.name] = std::move(f);
    inst.nonneg[p.name] = p.nonneg;
  }
  for (const auto& e : model.caps) {
    const std::int64_t cap = to_bound(e, resolve, "caps");
    if (cap == kUnbounded || cap < 1) throw ModelError("caps must be finite and positive");
    inst.caps.push_back(cap);
  }
  return inst;
}

}  // namespace rwb
