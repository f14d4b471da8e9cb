#pragma once

// State space {0,1,...}^M, box partitions, grid refinements and corner sets.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

namespace rwb {

inline constexpr std::int64_t kUnbounded = std::numeric_limits<std::int64_t>::max();
inline constexpr std::size_t kNone = static_cast<std::size_t>(-1);
/// Offsets are encoded in a dense table of size 5^M, so M is kept small.
inline constexpr std::size_t kMaxDimension = 6;

using State = std::vector<std::int64_t>;
/// A lattice displacement. Transition steps have entries in {-1,0,1}; offsets
/// inside a flow window reach {-2,...,2}.
using Step = std::vector<int>;

/// Offsets in {-2,...,2}^M are encoded base 5 with dimension 1 least significant.
std::size_t offset_code(std::span<const int> d);
Step decode_offset(std::size_t code, std::size_t dim);
std::size_t offset_space(std::size_t dim);
/// All steps in {-1,0,1}^M in increasing offset-code order (dimension 1 fastest).
std::vector<Step> unit_steps(std::size_t dim);
bool is_zero(std::span<const int> d);

struct LatticeBox {
  std::vector<std::int64_t> lower;
  std::vector<std::int64_t> upper;  // kUnbounded marks +infinity

  /// Throws InvalidBox when dimensions disagree or some lower > upper.
  static LatticeBox make(std::vector<std::int64_t> lower, std::vector<std::int64_t> upper);

  std::size_t dim() const { return lower.size(); }
  bool bounded(std::size_t i) const { return upper[i] != kUnbounded; }
  bool contains(std::span<const std::int64_t> n) const;
  /// True when n + d stays in the orthant for every n in the box.
  bool admits(std::span<const int> d) const;

  bool operator==(const LatticeBox&) const = default;
};

std::ostream& operator<<(std::ostream& os, const LatticeBox& box);

/// A validated partition of the orthant into boxes C_k. Immutable.
class Partition {
 public:
  Partition() = default;

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return boxes_.size(); }
  const LatticeBox& box(std::size_t k) const { return boxes_[k]; }
  const std::vector<LatticeBox>& boxes() const { return boxes_; }

  /// Index of the unique component containing n.
  std::size_t locate(std::span<const std::int64_t> n) const;
  /// Admissible steps N_k (including the zero step), in offset-code order.
  std::vector<Step> steps(std::size_t k) const;
  bool allows(std::size_t k, std::span<const int> step) const { return boxes_[k].admits(step); }

  bool operator==(const Partition& other) const { return boxes_ == other.boxes_; }

 private:
  friend Partition validate_partition(std::vector<LatticeBox> boxes, std::size_t dim);

  std::size_t dim_ = 0;
  std::vector<LatticeBox> boxes_;
  // Breakpoint grid: each grid cell lies inside exactly one component.
  std::vector<std::vector<std::int64_t>> breaks_;
  std::vector<std::size_t> grid_strides_;
  std::vector<std::size_t> grid_owner_;
};

/// Checks disjointness, coverage and constant neighborhoods. Throws Overlap,
/// CoverageGap or MixedNeighborhood (and InvalidBox for malformed boxes).
Partition validate_partition(std::vector<LatticeBox> boxes, std::size_t dim);

/// Grid refinement Z of a partition C. With reach r every cell is split so that
/// the component of n + d is the same for all n in the cell, for every
/// admissible d with |d_i| <= r. Reach 1 is the canonical refinement.
class Refinement {
 public:
  const Partition& components() const { return components_; }
  const Partition& cells() const { return cells_; }
  std::size_t size() const { return cells_.size(); }
  int reach() const { return reach_; }

  std::size_t parent(std::size_t j) const { return parent_[j]; }
  /// Component of n + d for n in cell j; throws StepNotAllowed when d is not
  /// admissible from the cell or exceeds the reach.
  std::size_t neighbor(std::size_t j, std::span<const int> d) const;
  /// Same lookup by offset code; kNone when not admissible.
  std::size_t neighbor_code(std::size_t j, std::size_t code) const {
    return neighbor_[j * offset_space_ + code];
  }
  std::size_t locate(std::span<const std::int64_t> n) const { return cells_.locate(n); }

 private:
  friend Refinement refine(const Partition& partition, int reach);

  Partition components_;
  Partition cells_;
  int reach_ = 1;
  std::size_t offset_space_ = 0;
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> neighbor_;
};

Refinement refine(const Partition& partition, int reach = 1);

/// c(j,u): the component reached from cell j by step u.
std::size_t neighbor_component(const Refinement& refinement, std::size_t j, std::span<const int> u);

struct CornerSet {
  std::vector<State> corners;        // the corner set of the box
  std::vector<std::size_t> unbounded;  // dimensions with upper = +infinity
};

CornerSet corners_and_unbounded(const LatticeBox& box);

}  // namespace rwb
