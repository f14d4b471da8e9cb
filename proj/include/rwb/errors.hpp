#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rwb {

/// Base class of every error raised by the library. `what()` carries a
/// human-readable message that names the offending component, cell or step.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- lattice -------------------------------------------------------------

class InvalidBox : public Error {
 public:
  using Error::Error;
};

class Overlap : public Error {
 public:
  Overlap(std::size_t first, std::size_t second);
  std::size_t first;
  std::size_t second;
};

class CoverageGap : public Error {
 public:
  explicit CoverageGap(std::vector<std::int64_t> witness);
  std::vector<std::int64_t> witness;
};

/// A box contains states with n_i = 0 and states with n_i >= 1, so the set of
/// admissible steps is not constant on it.
class MixedNeighborhood : public Error {
 public:
  MixedNeighborhood(std::size_t component, std::size_t dimension);
  std::size_t component;
  std::size_t dimension;
};

class StepNotAllowed : public Error {
 public:
  StepNotAllowed(std::size_t cell, std::vector<int> step);
  std::size_t cell;
  std::vector<int> step;
};

// ---- walk ----------------------------------------------------------------

class IllegalStep : public Error {
 public:
  IllegalStep(std::size_t component, std::vector<int> step);
  std::size_t component;
  std::vector<int> step;
};

class InvalidProbability : public Error {
 public:
  InvalidProbability(std::size_t component, std::vector<int> step, double value);
  std::size_t component;
  std::vector<int> step;
  double value;
};

class RowSumError : public Error {
 public:
  RowSumError(std::size_t component, double deviation);
  std::size_t component;
  double deviation;
};

class RateOverflow : public Error {
 public:
  RateOverflow(std::size_t component, double total, double constant);
  std::size_t component;
};

class PartitionMismatch : public Error {
 public:
  using Error::Error;
};

// ---- measure -------------------------------------------------------------

class DivergentMass : public Error {
 public:
  DivergentMass(std::size_t component, std::size_t dimension, double ratio);
  std::size_t component;
  std::size_t dimension;
};

// ---- lp ------------------------------------------------------------------

class NumericalFailure : public Error {
 public:
  explicit NumericalFailure(double residual);
  NumericalFailure(const std::string& message, double residual);
  double residual;
};

class AdapterUnavailable : public Error {
 public:
  using Error::Error;
};

// ---- flow ----------------------------------------------------------------

/// A flow subproblem that must be feasible came back infeasible or unbounded.
class InternalError : public Error {
 public:
  InternalError(std::size_t cell, std::vector<int> step, const std::string& status);
  std::size_t cell;
  std::vector<int> step;
};

// ---- oracle --------------------------------------------------------------

class MultipleAbsorbingClasses : public Error {
 public:
  explicit MultipleAbsorbingClasses(std::size_t count);
  std::size_t count;
};

// ---- model files / io ----------------------------------------------------

class ModelError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

std::string format_vector(const std::vector<int>& v);
std::string format_vector(const std::vector<std::int64_t>& v);

}  // namespace rwb
