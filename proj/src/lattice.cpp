#include "rwb/lattice.hpp"

#include <algorithm>
#include <ostream>
#include <string>

#include "rwb/errors.hpp"

namespace rwb {

std::size_t offset_space(std::size_t dim) {
  std::size_t s = 1;
  for (std::size_t i = 0; i < dim; ++i) s *= 5;
  return s;
}

std::size_t offset_code(std::span<const int> d) {
  std::size_t code = 0;
  std::size_t scale = 1;
  for (int di : d) {
    code += static_cast<std::size_t>(di + 2) * scale;
    scale *= 5;
  }
  return code;
}

Step decode_offset(std::size_t code, std::size_t dim) {
  Step d(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    d[i] = static_cast<int>(code % 5) - 2;
    code /= 5;
  }
  return d;
}

std::vector<Step> unit_steps(std::size_t dim) {
  std::vector<Step> out;
  Step u(dim, -1);
  while (true) {
    out.push_back(u);
    std::size_t i = 0;
    while (i < dim && u[i] == 1) u[i++] = -1;
    if (i == dim) break;
    ++u[i];
  }
  return out;
}

bool is_zero(std::span<const int> d) {
  return std::all_of(d.begin(), d.end(), [](int x) { return x == 0; });
}

LatticeBox LatticeBox::make(std::vector<std::int64_t> lower, std::vector<std::int64_t> upper) {
  if (lower.size() != upper.size() || lower.empty())
    throw InvalidBox("box bounds must be non-empty and of equal dimension");
  if (lower.size() > kMaxDimension)
    throw InvalidBox("dimension " + std::to_string(lower.size()) + " exceeds the supported maximum " +
                     std::to_string(kMaxDimension));
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (lower[i] < 0) throw InvalidBox("negative lower bound in dimension " + std::to_string(i + 1));
    if (lower[i] > upper[i])
      throw InvalidBox("empty box: lower > upper in dimension " + std::to_string(i + 1));
  }
  return LatticeBox{std::move(lower), std::move(upper)};
}

bool LatticeBox::contains(std::span<const std::int64_t> n) const {
  for (std::size_t i = 0; i < lower.size(); ++i)
    if (n[i] < lower[i] || n[i] > upper[i]) return false;
  return true;
}

bool LatticeBox::admits(std::span<const int> d) const {
  for (std::size_t i = 0; i < lower.size(); ++i)
    if (lower[i] + d[i] < 0) return false;
  return true;
}

std::ostream& operator<<(std::ostream& os, const LatticeBox& box) {
  for (std::size_t i = 0; i < box.dim(); ++i) {
    if (i) os << 'x';
    if (box.lower[i] == box.upper[i])
      os << '{' << box.lower[i] << '}';
    else if (!box.bounded(i))
      os << '[' << box.lower[i] << ",inf)";
    else
      os << '[' << box.lower[i] << ',' << box.upper[i] << ']';
  }
  return os;
}

namespace {

bool intersects(const LatticeBox& a, const LatticeBox& b) {
  for (std::size_t i = 0; i < a.dim(); ++i)
    if (a.upper[i] < b.lower[i] || b.upper[i] < a.lower[i]) return false;
  return true;
}

std::vector<std::int64_t> breakpoints(const std::vector<LatticeBox>& boxes, std::size_t i) {
  std::vector<std::int64_t> b{0};
  for (const auto& box : boxes) {
    b.push_back(box.lower[i]);
    if (box.bounded(i)) b.push_back(box.upper[i] + 1);
  }
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return b;
}

// Visits every multi-index of a grid with the given extents, dimension 1 fastest.
template <typename F>
void for_each_index(const std::vector<std::size_t>& extent, F&& f) {
  std::vector<std::size_t> idx(extent.size(), 0);
  for (auto e : extent)
    if (e == 0) return;
  while (true) {
    f(idx);
    std::size_t i = 0;
    while (i < idx.size() && ++idx[i] == extent[i]) idx[i++] = 0;
    if (i == idx.size()) return;
  }
}

}  // namespace

Partition validate_partition(std::vector<LatticeBox> boxes, std::size_t dim) {
  if (boxes.empty()) throw InvalidBox("partition has no components");
  if (dim == 0 || dim > kMaxDimension)
    throw InvalidBox("unsupported dimension " + std::to_string(dim));
  for (auto& box : boxes) {
    if (box.dim() != dim)
      throw InvalidBox("box of dimension " + std::to_string(box.dim()) + " in a partition of dimension " +
                       std::to_string(dim));
    box = LatticeBox::make(box.lower, box.upper);
  }

  // Constant neighborhood: in each dimension the box is {0} or avoids 0.
  for (std::size_t k = 0; k < boxes.size(); ++k)
    for (std::size_t i = 0; i < dim; ++i)
      if (boxes[k].lower[i] == 0 && boxes[k].upper[i] != 0) throw MixedNeighborhood(k, i);

  for (std::size_t a = 0; a < boxes.size(); ++a)
    for (std::size_t b = a + 1; b < boxes.size(); ++b)
      if (intersects(boxes[a], boxes[b])) throw Overlap(a, b);

  Partition p;
  p.dim_ = dim;
  p.breaks_.resize(dim);
  std::vector<std::size_t> extent(dim);
  p.grid_strides_.resize(dim);
  std::size_t total = 1;
  for (std::size_t i = 0; i < dim; ++i) {
    p.breaks_[i] = breakpoints(boxes, i);
    extent[i] = p.breaks_[i].size();
    p.grid_strides_[i] = total;
    total *= extent[i];
  }
  p.grid_owner_.assign(total, kNone);

  // Every grid cell lies inside or outside each box, so its lower corner decides.
  State corner(dim);
  for_each_index(extent, [&](const std::vector<std::size_t>& idx) {
    std::size_t flat = 0;
    for (std::size_t i = 0; i < dim; ++i) {
      corner[i] = p.breaks_[i][idx[i]];
      flat += idx[i] * p.grid_strides_[i];
    }
    for (std::size_t k = 0; k < boxes.size(); ++k) {
      if (boxes[k].contains(corner)) {
        p.grid_owner_[flat] = k;
        break;
      }
    }
    if (p.grid_owner_[flat] == kNone) throw CoverageGap(corner);
  });
  p.boxes_ = std::move(boxes);
  return p;
}

std::size_t Partition::locate(std::span<const std::int64_t> n) const {
  std::size_t flat = 0;
  for (std::size_t i = 0; i < dim_; ++i) {
    const auto& b = breaks_[i];
    auto it = std::upper_bound(b.begin(), b.end(), n[i]);
    flat += static_cast<std::size_t>(it - b.begin() - 1) * grid_strides_[i];
  }
  return grid_owner_[flat];
}

std::vector<Step> Partition::steps(std::size_t k) const {
  std::vector<Step> out;
  for (auto& u : unit_steps(dim_))
    if (boxes_[k].admits(u)) out.push_back(u);
  return out;
}

namespace {

struct Interval {
  std::int64_t lo;
  std::int64_t hi;
};

// Splits [a,b] into r singletons at each finite end plus the remaining middle.
std::vector<Interval> split_interval(std::int64_t a, std::int64_t b, int reach) {
  std::vector<Interval> out;
  if (b == kUnbounded) {
    for (int s = 0; s < reach; ++s) out.push_back({a + s, a + s});
    out.push_back({a + reach, kUnbounded});
    return out;
  }
  std::vector<Interval> tail;
  std::int64_t lo = a;
  std::int64_t hi = b;
  for (int s = 0; s < reach && lo <= hi; ++s) {
    out.push_back({lo, lo});
    ++lo;
    if (lo <= hi) {
      tail.push_back({hi, hi});
      --hi;
    }
  }
  if (lo <= hi) out.push_back({lo, hi});
  out.insert(out.end(), tail.rbegin(), tail.rend());
  return out;
}

}  // namespace

Refinement refine(const Partition& partition, int reach) {
  if (reach < 1 || reach > 2) throw InvalidBox("refinement reach must be 1 or 2");
  const std::size_t dim = partition.dim();

  std::vector<std::vector<Interval>> pieces(dim);
  std::vector<std::size_t> extent(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    auto b = breakpoints(partition.boxes(), i);
    for (std::size_t t = 0; t < b.size(); ++t) {
      std::int64_t hi = t + 1 < b.size() ? b[t + 1] - 1 : kUnbounded;
      for (auto piece : split_interval(b[t], hi, reach)) pieces[i].push_back(piece);
    }
    extent[i] = pieces[i].size();
  }

  std::vector<LatticeBox> cells;
  for_each_index(extent, [&](const std::vector<std::size_t>& idx) {
    std::vector<std::int64_t> lo(dim), hi(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      lo[i] = pieces[i][idx[i]].lo;
      hi[i] = pieces[i][idx[i]].hi;
    }
    cells.push_back(LatticeBox{std::move(lo), std::move(hi)});
  });

  Refinement r;
  r.components_ = partition;
  r.cells_ = validate_partition(std::move(cells), dim);
  r.reach_ = reach;
  r.offset_space_ = offset_space(dim);
  r.parent_.resize(r.cells_.size());
  r.neighbor_.assign(r.cells_.size() * r.offset_space_, kNone);

  State shifted(dim);
  for (std::size_t j = 0; j < r.cells_.size(); ++j) {
    const auto& cell = r.cells_.box(j);
    r.parent_[j] = partition.locate(cell.lower);
    for (std::size_t code = 0; code < r.offset_space_; ++code) {
      Step d = decode_offset(code, dim);
      bool in_reach = std::all_of(d.begin(), d.end(), [&](int x) { return std::abs(x) <= reach; });
      if (!in_reach || !cell.admits(d)) continue;
      for (std::size_t i = 0; i < dim; ++i) shifted[i] = cell.lower[i] + d[i];
      r.neighbor_[j * r.offset_space_ + code] = partition.locate(shifted);
    }
  }
  return r;
}

std::size_t Refinement::neighbor(std::size_t j, std::span<const int> d) const {
  for (int x : d)
    if (x < -2 || x > 2) throw StepNotAllowed(j, Step(d.begin(), d.end()));
  std::size_t k = neighbor_code(j, offset_code(d));
  if (k == kNone) throw StepNotAllowed(j, Step(d.begin(), d.end()));
  return k;
}

std::size_t neighbor_component(const Refinement& refinement, std::size_t j, std::span<const int> u) {
  for (int x : u)
    if (x < -1 || x > 1) throw StepNotAllowed(j, Step(u.begin(), u.end()));
  return refinement.neighbor(j, u);
}

CornerSet corners_and_unbounded(const LatticeBox& box) {
  CornerSet out;
  const std::size_t dim = box.dim();
  std::vector<std::vector<std::int64_t>> choices(dim);
  std::vector<std::size_t> extent(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    if (!box.bounded(i)) {
      out.unbounded.push_back(i);
      choices[i] = {box.lower[i]};
    } else if (box.lower[i] == box.upper[i]) {
      choices[i] = {box.lower[i]};
    } else {
      choices[i] = {box.lower[i], box.upper[i]};
    }
    extent[i] = choices[i].size();
  }
  for_each_index(extent, [&](const std::vector<std::size_t>& idx) {
    State n(dim);
    for (std::size_t i = 0; i < dim; ++i) n[i] = choices[i][idx[i]];
    out.corners.push_back(std::move(n));
  });
  return out;
}

}  // namespace rwb
