#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rwb/errors.hpp"
#include "rwb/lattice.hpp"
#include "rwb/model.hpp"
#include "rwb/walk.hpp"

namespace rwb::testing {

inline constexpr std::int64_t kInfty = kUnbounded;

inline LatticeBox box(std::vector<std::int64_t> lower, std::vector<std::int64_t> upper) {
  return LatticeBox::make(std::move(lower), std::move(upper));
}

inline std::string model_path(const std::string& name) { return std::string(RWB_MODELS_DIR) + "/" + name + ".json"; }

inline ModelInstance load_instance(const std::string& name, const ParameterValues& overrides = {}) {
  return instantiate(load_model(model_path(name)), overrides);
}

/// The six components of the two-dimensional example partition.
inline Partition example_partition() {
  return validate_partition({box({0, 0}, {0, 0}), box({1, 0}, {4, 0}), box({5, 0}, {kInfty, 0}),
                             box({0, 1}, {0, kInfty}), box({1, 1}, {4, kInfty}), box({5, 1}, {kInfty, kInfty})},
                            2);
}

/// One-dimensional queue: {0} and [1, inf) with up 0.3 and down 0.5.
inline RandomWalkSpec queue_walk() {
  const Partition p = validate_partition({box({0}, {0}), box({1}, {kInfty})}, 1);
  return validate_walk(p, make_law({{{{1}, 0.3}, {{0}, 0.7}}, {{{1}, 0.3}, {{-1}, 0.5}, {{0}, 0.2}}}, 1));
}

}  // namespace rwb::testing

namespace rwb::testing {

inline std::size_t component_index(const ModelInstance& inst, const std::string& name) {
  for (std::size_t k = 0; k < inst.component_names.size(); ++k)
    if (inst.component_names[k] == name) return k;
  throw ModelError("no component " + name);
}

}  // namespace rwb::testing
