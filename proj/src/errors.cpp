#include "rwb/errors.hpp"

#include <sstream>

namespace rwb {

namespace {

template <typename T>
std::string join(const std::vector<T>& v) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ',';
    os << v[i];
  }
  os << ')';
  return os.str();
}

}  // namespace

std::string format_vector(const std::vector<int>& v) { return join(v); }
std::string format_vector(const std::vector<std::int64_t>& v) { return join(v); }

Overlap::Overlap(std::size_t a, std::size_t b)
    : Error("components " + std::to_string(a) + " and " + std::to_string(b) + " overlap"),
      first(a),
      second(b) {}

CoverageGap::CoverageGap(std::vector<std::int64_t> w)
    : Error("state " + format_vector(w) + " is not covered by any component"),
      witness(std::move(w)) {}

MixedNeighborhood::MixedNeighborhood(std::size_t k, std::size_t i)
    : Error("component " + std::to_string(k) + " contains both n_" + std::to_string(i + 1) +
            " = 0 and n_" + std::to_string(i + 1) + " >= 1"),
      component(k),
      dimension(i) {}

StepNotAllowed::StepNotAllowed(std::size_t j, std::vector<int> u)
    : Error("step " + format_vector(u) + " is not admissible from cell " + std::to_string(j)),
      cell(j),
      step(std::move(u)) {}

IllegalStep::IllegalStep(std::size_t k, std::vector<int> u)
    : Error("component " + std::to_string(k) + " has positive probability on step " +
            format_vector(u) + " which leaves the orthant"),
      component(k),
      step(std::move(u)) {}

InvalidProbability::InvalidProbability(std::size_t k, std::vector<int> u, double p)
    : Error("component " + std::to_string(k) + " step " + format_vector(u) +
            " has probability " + std::to_string(p) + " outside [0,1]"),
      component(k),
      step(std::move(u)),
      value(p) {}

RowSumError::RowSumError(std::size_t k, double dev)
    : Error("transition probabilities of component " + std::to_string(k) +
            " do not sum to 1 (deviation " + std::to_string(dev) + ")"),
      component(k),
      deviation(dev) {}

RateOverflow::RateOverflow(std::size_t k, double total, double constant)
    : Error("total rate " + std::to_string(total) + " of component " + std::to_string(k) +
            " exceeds the uniformization constant " + std::to_string(constant)),
      component(k) {}

DivergentMass::DivergentMass(std::size_t k, std::size_t i, double ratio)
    : Error("component " + std::to_string(k) + " is unbounded in dimension " +
            std::to_string(i + 1) + " with ratio " + std::to_string(ratio) + " >= 1"),
      component(k),
      dimension(i) {}

NumericalFailure::NumericalFailure(double r)
    : Error("LP solution residual " + std::to_string(r) + " exceeds 1e-6 after refinement"),
      residual(r) {}

NumericalFailure::NumericalFailure(const std::string& message, double r) : Error(message), residual(r) {}

InternalError::InternalError(std::size_t j, std::vector<int> u, const std::string& status)
    : Error("flow subproblem for cell " + std::to_string(j) + ", step " + format_vector(u) +
            " returned " + status),
      cell(j),
      step(std::move(u)) {}

MultipleAbsorbingClasses::MultipleAbsorbingClasses(std::size_t n)
    : Error("chain has " + std::to_string(n) + " closed communicating classes, expected 1"),
      count(n) {}

}  // namespace rwb
