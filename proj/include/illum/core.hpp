#pragma once

// Intervals, variable spaces, boxes and the small random-number helpers every
// other module builds on.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace illum {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  static Interval checked(double lo, double hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi)) throw Error("interval bounds must be finite");
    if (lo > hi) throw Error("interval lower bound exceeds upper bound");
    return {lo, hi};
  }

  constexpr double width() const { return hi - lo; }
  constexpr double mid() const { return lo + 0.5 * (hi - lo); }
  constexpr bool contains(double x) const { return lo <= x && x <= hi; }
  constexpr bool contains(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }

  friend constexpr bool operator==(const Interval&, const Interval&) = default;
};

inline Interval hull(const Interval& a, const Interval& b) {
  return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
}

enum class Role { Input, Output };

using VarIndex = std::size_t;

struct Variable {
  std::string name;
  Role role = Role::Input;
  Interval bounds;
};

// Dense assignment over every variable of a Space; NaN marks "unassigned".
using Point = std::vector<double>;

inline Point unassigned_point(std::size_t n) {
  return Point(n, std::numeric_limits<double>::quiet_NaN());
}

/// Axis-aligned hyper-rectangle over a subset of a Space's variables.
/// Axes are kept sorted by variable index so two boxes over the same
/// variables compare axis-by-axis.
class Box {
 public:
  Box() = default;

  Box(std::vector<VarIndex> vars, std::vector<Interval> bounds) {
    if (vars.size() != bounds.size()) throw Error("box: variable/bound count mismatch");
    std::vector<std::size_t> order(vars.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return vars[a] < vars[b]; });
    vars_.reserve(vars.size());
    bounds_.reserve(vars.size());
    for (auto i : order) {
      if (!vars_.empty() && vars_.back() == vars[i]) throw Error("box: duplicate variable");
      if (bounds[i].lo > bounds[i].hi || !std::isfinite(bounds[i].lo) || !std::isfinite(bounds[i].hi))
        throw Error("box: malformed interval");
      vars_.push_back(vars[i]);
      bounds_.push_back(bounds[i]);
    }
  }

  std::size_t dim() const { return vars_.size(); }
  bool empty() const { return vars_.empty(); }
  const std::vector<VarIndex>& vars() const { return vars_; }
  const std::vector<Interval>& bounds() const { return bounds_; }
  const Interval& axis(std::size_t k) const { return bounds_[k]; }
  Interval& axis(std::size_t k) { return bounds_[k]; }
  VarIndex var(std::size_t k) const { return vars_[k]; }

  const Interval* find(VarIndex v) const {
    auto it = std::lower_bound(vars_.begin(), vars_.end(), v);
    if (it == vars_.end() || *it != v) return nullptr;
    return &bounds_[static_cast<std::size_t>(it - vars_.begin())];
  }

  bool same_vars(const Box& o) const { return vars_ == o.vars_; }

  bool contains(const Box& o) const {
    if (!same_vars(o)) return false;
    for (std::size_t k = 0; k < dim(); ++k)
      if (!bounds_[k].contains(o.bounds_[k])) return false;
    return true;
  }

  bool contains(const Point& x) const {
    for (std::size_t k = 0; k < dim(); ++k) {
      double v = x.at(vars_[k]);
      if (!(bounds_[k].lo <= v && v <= bounds_[k].hi)) return false;
    }
    return true;
  }

  Point center(std::size_t space_size) const {
    Point p = unassigned_point(space_size);
    for (std::size_t k = 0; k < dim(); ++k) p[vars_[k]] = bounds_[k].mid();
    return p;
  }

  friend bool operator==(const Box&, const Box&) = default;

 private:
  std::vector<VarIndex> vars_;
  std::vector<Interval> bounds_;
};

inline double box_volume(const Box& b) {
  double v = 1.0;
  for (const auto& iv : b.bounds()) v *= iv.width();
  return v;
}

/// Box over the union of both boxes' variables; the variable sets must be disjoint.
inline Box joint_box(const Box& a, const Box& b) {
  std::vector<VarIndex> vars = a.vars();
  std::vector<Interval> bounds = a.bounds();
  vars.insert(vars.end(), b.vars().begin(), b.vars().end());
  bounds.insert(bounds.end(), b.bounds().begin(), b.bounds().end());
  return Box(std::move(vars), std::move(bounds));
}

inline Box hull(const Box& a, const Box& b) {
  if (!a.same_vars(b)) throw Error("hull: boxes over different variables");
  Box out = a;
  for (std::size_t k = 0; k < a.dim(); ++k) out.axis(k) = hull(a.axis(k), b.axis(k));
  return out;
}

/// Affinely rescales each axis of `b` so that `bounding` maps onto [0,1].
inline Box normalize_box(const Box& b, const Box& bounding) {
  std::vector<Interval> out;
  out.reserve(b.dim());
  for (std::size_t k = 0; k < b.dim(); ++k) {
    const Interval* ref = bounding.find(b.var(k));
    if (ref == nullptr) throw Error("normalize_box: variable missing from bounding box");
    double w = ref->width();
    if (!(w > 0.0)) throw Error("normalize_box: zero-width bounding axis");
    out.push_back({(b.axis(k).lo - ref->lo) / w, (b.axis(k).hi - ref->lo) / w});
  }
  return Box(b.vars(), std::move(out));
}

/// Ordered list of named variables with roles and a bounding box over all of them.
class Space {
 public:
  Space() = default;

  explicit Space(std::vector<Variable> vars) : vars_(std::move(vars)) {
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      const auto& v = vars_[i];
      if (v.name.empty()) throw Error("space: empty variable name");
      Interval::checked(v.bounds.lo, v.bounds.hi);
      if (!index_.emplace(v.name, i).second) throw Error("space: duplicate variable '" + v.name + "'");
    }
  }

  std::size_t size() const { return vars_.size(); }
  const Variable& var(VarIndex i) const { return vars_.at(i); }
  const std::vector<Variable>& variables() const { return vars_; }

  std::optional<VarIndex> index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  VarIndex require(const std::string& name) const {
    auto i = index_of(name);
    if (!i) throw Error("unknown variable '" + name + "'");
    return *i;
  }

  std::vector<VarIndex> with_role(Role r) const {
    std::vector<VarIndex> out;
    for (std::size_t i = 0; i < vars_.size(); ++i)
      if (vars_[i].role == r) out.push_back(i);
    return out;
  }
  std::vector<VarIndex> inputs() const { return with_role(Role::Input); }
  std::vector<VarIndex> outputs() const { return with_role(Role::Output); }

  Box bounding(const std::vector<VarIndex>& vars) const {
    std::vector<Interval> b;
    b.reserve(vars.size());
    for (auto v : vars) b.push_back(vars_.at(v).bounds);
    return Box(vars, std::move(b));
  }
  Box bounding() const {
    std::vector<VarIndex> all(vars_.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return bounding(all);
  }
  Box input_bounding() const { return bounding(inputs()); }

 private:
  std::vector<Variable> vars_;
  std::unordered_map<std::string, VarIndex> index_;
};

// ---------------------------------------------------------------------------
// Randomness. The engine draws everything from a 64-bit Mersenne twister and
// converts bits to doubles itself so sequences are identical across standard
// library implementations.

using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) {
  if (!(hi > lo)) return lo;
  double x = lo + (hi - lo) * uniform01(rng);
  return std::min(x, hi);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

/// Uniform sample inside `b`; variables outside the box stay unassigned.
inline Point sample_in_box(const Box& b, std::size_t space_size, Rng& rng) {
  Point p = unassigned_point(space_size);
  for (std::size_t k = 0; k < b.dim(); ++k) p[b.var(k)] = uniform(rng, b.axis(k).lo, b.axis(k).hi);
  return p;
}

}  // namespace illum
