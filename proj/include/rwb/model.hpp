#pragma once

// Declarative model files: named parameters, components with their transition
// entries and measure factors, and performance functions, all given as
// arithmetic expressions over the parameters.

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "rwb/bounds.hpp"
#include "rwb/lattice.hpp"
#include "rwb/linfunc.hpp"
#include "rwb/measure.hpp"
#include "rwb/walk.hpp"

namespace rwb {

using ParameterValues = std::map<std::string, double>;

/// Evaluates +, -, *, /, ^, parentheses, unary minus, numbers and parameter
/// names. Throws ModelError naming the unknown symbol or the parse position.
double evaluate_expression(std::string_view text, const ParameterValues& values);

struct ComponentSpec {
  std::string name;
  std::vector<std::string> lower;
  std::vector<std::string> upper;  // "inf" allowed
  bool optional = false;           // dropped when some lower > upper
  std::vector<std::pair<Step, std::string>> original;
  std::vector<std::pair<Step, std::string>> perturbed;
  std::string weight = "1";
  std::vector<std::string> ratios;

  bool operator==(const ComponentSpec&) const = default;
};

struct PerformanceSpec {
  std::string name;
  bool nonneg = false;
  std::vector<std::string> fallback;                         // row for components not listed
  std::vector<std::pair<std::string, std::vector<std::string>>> rows;  // component name -> row

  bool operator==(const PerformanceSpec&) const = default;
};

struct ModelFile {
  std::string name;
  std::string description;
  std::size_t dim = 0;
  std::vector<std::pair<std::string, std::string>> parameters;
  std::string uniformization;  // empty: entries are probabilities
  std::vector<ComponentSpec> components;
  std::vector<PerformanceSpec> performances;
  std::vector<std::string> caps;  // empty: chosen from the measure tail
  double tail = 1e-8;

  bool operator==(const ModelFile&) const = default;

  bool has_parameter(std::string_view name) const;
  const PerformanceSpec& performance(std::string_view name) const;
};

/// Throws ModelError with the offending key.
ModelFile parse_model(const std::string& json_text);
ModelFile load_model(const std::filesystem::path& path);
std::string serialize_model(const ModelFile& model);

/// A model file evaluated at one parameter point.
struct ModelInstance {
  ParameterValues values;
  std::vector<std::string> component_names;
  Partition partition;
  RandomWalkSpec original;
  RandomWalkSpec perturbed;
  std::shared_ptr<const GeometricStationaryMeasure> measure;  // normalized
  std::map<std::string, CLinearFn> performances;
  std::map<std::string, bool> nonneg;
  std::vector<std::int64_t> caps;  // empty unless given in the file

  BoundModel bound_model(const std::string& performance) const;
  /// File caps, or the smallest uniform cap with measure tail <= the file tail.
  std::vector<std::int64_t> oracle_caps(double tail) const;
};

/// Overrides replace parameter values before derived parameters are evaluated.
/// Throws ModelError, and the validation errors of the lattice and walk modules.
ModelInstance instantiate(const ModelFile& model, const ParameterValues& overrides = {});

}  // namespace rwb
