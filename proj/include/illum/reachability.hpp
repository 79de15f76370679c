#pragma once

// Box reachability: refinement of the input space until each retained box is
// small enough, pruning boxes whose joint (input x output image) box cannot
// satisfy the question.

#include <cstdio>
#include <deque>
#include <map>

#include "illum/decision.hpp"
#include "illum/domain.hpp"
#include "illum/models.hpp"

namespace illum {

struct StopParams {
  double epsilon = 0.25;
  Box bounding;
};

/// Side length of axis k relative to the bounding box.
inline double axis_ratio(const Box& b, std::size_t k, const Box& bounding) {
  const Interval* ref = bounding.find(b.var(k));
  if (ref == nullptr) throw Error("axis_ratio: variable missing from bounding box");
  return b.axis(k).width() / ref->width();
}

inline bool stop(const Box& b, const StopParams& p) {
  for (std::size_t k = 0; k < b.dim(); ++k)
    if (axis_ratio(b, k, p.bounding) > p.epsilon) return false;
  return true;
}

/// Axis with the largest normalized length; ties go to the lowest variable index.
inline std::size_t longest_axis(const Box& b, const Box& bounding) {
  std::size_t best = 0;
  double best_r = -1.0;
  for (std::size_t k = 0; k < b.dim(); ++k) {
    double r = axis_ratio(b, k, bounding);
    if (r > best_r) {
      best_r = r;
      best = k;
    }
  }
  return best;
}

inline std::vector<Box> refine(const Box& b, int k, const Box& bounding) {
  if (k != 2 && k != 3) throw Error("refine: k must be 2 or 3");
  std::size_t h = longest_axis(b, bounding);
  Interval ax = b.axis(h);
  double c = ax.width() / k;
  std::vector<Box> out;
  for (int j = 0; j < k; ++j) {
    Box piece = b;
    // first and last pieces keep the exact parent endpoints
    double lo = j == 0 ? ax.lo : ax.lo + j * c;
    double hi = j == k - 1 ? ax.hi : ax.lo + (j + 1) * c;
    piece.axis(h) = {lo, std::max(lo, hi)};
    out.push_back(std::move(piece));
  }
  return out;
}

/// The 2^d orthants of `bounding`; the whole box when d exceeds `dim_cap`.
inline std::vector<Box> initial_abstraction(const Box& bounding, std::size_t dim_cap = 12) {
  std::size_t d = bounding.dim();
  if (d > dim_cap) {
    std::fprintf(stderr, "warning: %zu input dimensions exceed the orthant cap %zu; starting from the whole box\n", d,
                 dim_cap);
    return {bounding};
  }
  std::vector<Box> out;
  out.reserve(std::size_t{1} << d);
  for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
    Box b = bounding;
    for (std::size_t k = 0; k < d; ++k) {
      Interval ax = bounding.axis(k);
      double m = ax.mid();
      b.axis(k) = (mask >> k) & 1u ? Interval{m, ax.hi} : Interval{ax.lo, m};
    }
    out.push_back(std::move(b));
  }
  return out;
}

struct QuestionSpec {
  Formula phi;
  Side side = Side::Input;
};

inline QuestionSpec question_to_spec(const Question& q, const DomainPack& pack) {
  if (q.content.empty()) throw Error("question has empty content");
  std::vector<Formula> ds;
  for (const auto& conj : q.content) {
    if (conj.empty()) throw Error("question has an empty conjunct list");
    std::vector<Formula> cs;
    for (const auto& name : conj) cs.push_back(pack.predicate(pack.require(name)).formula);
    ds.push_back(cs.size() == 1 ? std::move(cs.front()) : Formula::all_of(std::move(cs)));
  }
  Formula phi = ds.size() == 1 ? std::move(ds.front()) : Formula::any_of(std::move(ds));
  return {std::move(phi), illuminated_side(q.type)};
}

struct AnalysisOptions {
  Strength mode = Strength::Strict;
  std::size_t n_sample = 32;         // Usually-mode samples per box
  std::size_t feasibility_samples = 4;  // Strict-mode cheap witnesses before the prover
  double p_bisect = 0.8;
  bool force_k2 = false;
  std::size_t max_boxes = 200000;
  std::size_t max_depth = 60;
  bool smt_in_reach = false;
  bool breadth_first = false;  // visit order; only matters once max_boxes is hit
};

struct AnalysisStats {
  std::size_t examined = 0;
  std::size_t depth_capped = 0;
  bool cap_hit = false;
};

namespace reach_detail {

struct Item {
  Box box;
  std::size_t depth = 0;
  std::uint64_t seed = 0;
  bool inside = false;  // within a region already proven to satisfy phi
};

inline bool usually_hit(const Formula& phi, const Box& b, const BoundModel& L, std::size_t n, std::size_t space_size,
                        Rng& rng) {
  for (std::size_t i = 0; i < n; ++i) {
    Point p = sample_in_box(b, space_size, rng);
    L.complete(p);
    if (eval_point(phi, p)) return true;
  }
  return false;
}

}  // namespace reach_detail

/// Worklist form of the refinement recursion, depth-first like the recursion
/// itself: a box's children are finished before its next sibling. Children
/// carry seeds derived from their parent, so the result is a deterministic
/// function of (start boxes, seed). Under the box budget this means the
/// boxes visited first are refined all the way to epsilon and the rest stay
/// coarse.
inline std::vector<Box> cegar_like_analysis(const std::vector<Box>& starts, const StopParams& p, const Formula& phi,
                                            const BoundModel& L, std::size_t space_size, const AnalysisOptions& opt,
                                            std::uint64_t seed, const Decider& decider = Decider{},
                                            AnalysisStats* stats = nullptr) {
  using reach_detail::Item;
  AnalysisStats local;
  AnalysisStats& st = stats ? *stats : local;
  Decider builtin;
  const Decider& dec = opt.smt_in_reach ? decider : builtin;
  Formula not_phi = Formula::negation(phi);

  // Depth-first: a stack whose top is next. Breadth-first: a queue.
  std::deque<Item> work;
  auto push = [&](Item it) {
    if (opt.breadth_first) work.push_back(std::move(it));
    else work.push_front(std::move(it));
  };
  auto push_all = [&](std::vector<Item> items) {
    if (opt.breadth_first)
      for (auto& it : items) push(std::move(it));
    else
      for (auto i = items.size(); i-- > 0;) push(std::move(items[i]));
  };
  {
    std::vector<Item> first;
    for (std::size_t i = 0; i < starts.size(); ++i) first.push_back({starts[i], 0, mix_seed(seed, i), false});
    push_all(std::move(first));
  }
  std::vector<Box> out;

  // verdict_1: true when no point of the joint box can satisfy phi
  auto prune = [&](const Item& it) {
    Rng rng(mix_seed(it.seed, 0x9e37));
    if (opt.mode == Strength::Usually)
      return !reach_detail::usually_hit(phi, it.box, L, opt.n_sample, space_size, rng);
    if (reach_detail::usually_hit(phi, it.box, L, opt.feasibility_samples, space_size, rng)) return false;
    Box joint = joint_box(it.box, L.box_image(it.box));
    return dec.forall_holds(not_phi, joint).proven();
  };

  auto split = [&](const Item& it, bool inside) {
    Rng rng(mix_seed(it.seed, 0x7f4a));
    int k = opt.force_k2 || uniform01(rng) < opt.p_bisect ? 2 : 3;
    auto kids = refine(it.box, k, p.bounding);
    std::vector<Item> items;
    for (std::size_t j = 0; j < kids.size(); ++j)
      items.push_back({std::move(kids[j]), it.depth + 1, mix_seed(it.seed, j + 1), inside});
    push_all(std::move(items));
  };

  while (!work.empty()) {
    Item it = std::move(work.front());
    work.pop_front();
    if (st.examined >= opt.max_boxes) {
      // Budget exhausted: keep whatever cannot be pruned, unrefined.
      st.cap_hit = true;
      if (it.inside || !prune(it)) out.push_back(std::move(it.box));
      continue;
    }
    ++st.examined;
    if (it.inside) {
      if (stop(it.box, p) || it.depth >= opt.max_depth) out.push_back(std::move(it.box));
      else split(it, true);
      continue;
    }
    if (prune(it)) continue;
    if (stop(it.box, p)) {
      out.push_back(std::move(it.box));
      continue;
    }
    if (it.depth >= opt.max_depth) {
      if (st.depth_capped++ == 0) std::fprintf(stderr, "warning: refinement depth cap %zu reached\n", opt.max_depth);
      out.push_back(std::move(it.box));
      continue;
    }
    if (opt.mode == Strength::Strict) {
      Box joint = joint_box(it.box, L.box_image(it.box));
      if (dec.forall_holds(phi, joint).proven()) {
        split(it, true);
        continue;
      }
    }
    split(it, false);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Merging

struct MergeParams {
  double theta = 1e-9;  // relative to the bounding width of each axis
  std::size_t max_rounds = 64;
};

/// Greedy merging of boxes that partition a larger box. Along each axis in
/// turn, boxes with equal extents on every other axis (within theta) that
/// abut end to end are replaced by their hull. Repeats until nothing merges.
inline std::vector<Box> merge_boxes(std::vector<Box> boxes, const MergeParams& mp = {}) {
  if (boxes.size() < 2) return boxes;
  const auto& vars = boxes.front().vars();
  for (const auto& b : boxes)
    if (b.vars() != vars) throw Error("merge_boxes: boxes over different variables");
  std::size_t d = vars.size();
  std::vector<double> q(d);
  for (std::size_t k = 0; k < d; ++k) {
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& b : boxes) {
      lo = std::min(lo, b.axis(k).lo);
      hi = std::max(hi, b.axis(k).hi);
    }
    q[k] = std::max(mp.theta * (hi - lo), std::numeric_limits<double>::min());
  }
  auto quant = [&](double v, std::size_t k) { return static_cast<long long>(std::llround(v / q[k])); };

  for (std::size_t round = 0; round < mp.max_rounds; ++round) {
    bool changed = false;
    for (std::size_t k = 0; k < d && boxes.size() > 1; ++k) {
      std::map<std::vector<long long>, std::vector<std::size_t>> groups;
      for (std::size_t i = 0; i < boxes.size(); ++i) {
        std::vector<long long> key;
        key.reserve(2 * d);
        for (std::size_t a = 0; a < d; ++a)
          if (a != k) {
            key.push_back(quant(boxes[i].axis(a).lo, a));
            key.push_back(quant(boxes[i].axis(a).hi, a));
          }
        groups[key].push_back(i);
      }
      std::vector<Box> next;
      next.reserve(boxes.size());
      for (auto& [key, idx] : groups) {
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
          if (boxes[a].axis(k).lo != boxes[b].axis(k).lo) return boxes[a].axis(k).lo < boxes[b].axis(k).lo;
          return a < b;
        });
        Box cur = boxes[idx[0]];
        for (std::size_t j = 1; j < idx.size(); ++j) {
          const Box& nb = boxes[idx[j]];
          if (std::fabs(nb.axis(k).lo - cur.axis(k).hi) <= q[k]) {
            cur = hull(cur, nb);
            changed = true;
          } else {
            next.push_back(std::move(cur));
            cur = nb;
          }
        }
        next.push_back(std::move(cur));
      }
      boxes = std::move(next);
    }
    if (!changed) break;
  }
  std::sort(boxes.begin(), boxes.end(), [](const Box& a, const Box& b) {
    for (std::size_t k = 0; k < a.dim(); ++k) {
      if (a.axis(k).lo != b.axis(k).lo) return a.axis(k).lo < b.axis(k).lo;
      if (a.axis(k).hi != b.axis(k).hi) return a.axis(k).hi < b.axis(k).hi;
    }
    return false;
  });
  return boxes;
}

// ---------------------------------------------------------------------------

struct ReachPair {
  Box input;
  Box output;
};

struct ReachSet {
  std::vector<ReachPair> pairs;
  Question question;
  double epsilon = 0.0;
  Strength mode = Strength::Strict;
  bool merged = false;
  AnalysisStats stats;

  /// Boxes the description is about: inputs, outputs, or joint boxes.
  std::vector<Box> illuminated(Side side) const {
    std::vector<Box> out;
    out.reserve(pairs.size());
    for (const auto& pr : pairs) {
      if (side == Side::Input) out.push_back(pr.input);
      else if (side == Side::Output) out.push_back(pr.output);
      else out.push_back(joint_box(pr.input, pr.output));
    }
    return out;
  }
};

struct ReachOptions {
  double epsilon = 0.25;
  AnalysisOptions analysis;
  bool merge = false;
  MergeParams merge_params;
  std::size_t orthant_dim_cap = 12;
};

inline ReachSet build_reachset(const Question& q, const DomainPack& pack, const BoundModel& L, const ReachOptions& ro,
                               std::uint64_t seed, const Decider& decider = Decider{}) {
  if (!(ro.epsilon > 0.0)) throw Error("epsilon must be positive");
  auto spec = question_to_spec(q, pack);
  const Space& space = pack.space();
  StopParams sp{ro.epsilon, space.input_bounding()};
  AnalysisOptions ao = ro.analysis;
  ao.mode = q.strength;
  ReachSet rs;
  rs.question = q;
  rs.epsilon = ro.epsilon;
  rs.mode = q.strength;
  auto boxes = cegar_like_analysis(initial_abstraction(sp.bounding, ro.orthant_dim_cap), sp, spec.phi, L, space.size(),
                                   ao, seed, decider, &rs.stats);
  if (ro.merge) {
    boxes = merge_boxes(std::move(boxes), ro.merge_params);
    rs.merged = true;
  }
  rs.pairs.reserve(boxes.size());
  for (auto& b : boxes) {
    Box ob = L.box_image(b);
    rs.pairs.push_back({std::move(b), std::move(ob)});
  }
  return rs;
}

}  // namespace illum
