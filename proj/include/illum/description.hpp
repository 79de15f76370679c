#pragma once

// Turning a set of boxes into a weighted DNF over the pack's predicates.
//
// Conditions are interned in a ConditionTable and referred to by id; boxes
// are referred to by their index in the input list. All randomness comes from
// the caller's Rng, drawn in a fixed order.

#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

#include "illum/decision.hpp"
#include "illum/domain.hpp"
#include "illum/reachability.hpp"

namespace illum {

using BoxSet = std::set<std::size_t>;
using CondToBoxes = std::map<std::size_t, BoxSet>;

class ConditionTable {
 public:
  std::size_t intern(const Condition& c) {
    auto k = c.key();
    auto it = index_.find(k);
    if (it != index_.end()) return it->second;
    items_.push_back(c);
    index_.emplace(std::move(k), items_.size() - 1);
    return items_.size() - 1;
  }
  std::optional<std::size_t> find(const Condition& c) const {
    auto it = index_.find(c.key());
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  const Condition& at(std::size_t i) const { return items_.at(i); }
  std::size_t size() const { return items_.size(); }

 private:
  std::vector<Condition> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct DescriptionOptions {
  std::size_t n_sample = 20;          // point checks before a formal consistency check
  std::size_t n_shell = 20;           // samples per shell when ranking specificity
  std::size_t n_prior_formal = 8;     // point checks before a formal disjunction check
  double alpha = 0.1;
  bool produce_greater_abstraction = false;
  MergeParams merge_params;
  std::set<std::size_t> ignored;      // predicate indices left out of the vocabulary
};

// ---------------------------------------------------------------------------
// Per-box predicate selection

/// Ids (into `conds`) of conditions that hold on all of `b`: sampled first,
/// then proven. Unknown verdicts count as inconsistent.
inline std::vector<std::size_t> get_consistent_conditions(const Box& b, std::size_t n_sample,
                                                          const std::vector<Formula>& conds, Rng& rng,
                                                          const Decider& dec = Decider{}) {
  std::size_t sz = dense_size(b);
  std::vector<Point> samples;
  samples.reserve(n_sample);
  for (std::size_t i = 0; i < n_sample; ++i) samples.push_back(sample_in_box(b, sz, rng));
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < conds.size(); ++i) {
    if (!vars_within(conds[i], b)) continue;
    bool ok = true;
    for (const auto& s : samples)
      if (!eval_point(conds[i], s)) {
        ok = false;
        break;
      }
    if (ok && dec.forall_holds(conds[i], b).proven()) out.push_back(i);
  }
  return out;
}

inline const std::vector<double>& shell_base() {
  static const std::vector<double> c{1.0, 1.01, 1.05, 1.1, 1.2, 1.4, 1.8, 2.6};
  return c;
}

inline std::vector<double> shell_schedule(double alpha) {
  std::vector<double> out;
  for (double c : shell_base()) out.push_back(c * std::exp(alpha * c));
  return out;
}

inline Box scale_about_center(const Box& b, double r) {
  Box out = b;
  for (std::size_t k = 0; k < b.dim(); ++k) {
    double c = b.axis(k).mid();
    out.axis(k) = {c + (b.axis(k).lo - c) * r, c + (b.axis(k).hi - c) * r};
  }
  return out;
}

/// Uniform point of `outer` not strictly inside `inner`, by rejection. When
/// the shell is too thin for rejection, one axis is pushed into its slab.
inline Point sample_between_boxes(const Box& inner, const Box& outer, std::size_t space_size, Rng& rng) {
  auto strictly_inside = [&](const Point& p) {
    for (std::size_t k = 0; k < inner.dim(); ++k) {
      double v = p[inner.var(k)];
      if (!(inner.axis(k).lo < v && v < inner.axis(k).hi)) return false;
    }
    return true;
  };
  for (int t = 0; t < 256; ++t) {
    Point p = sample_in_box(outer, space_size, rng);
    if (!strictly_inside(p)) return p;
  }
  Point p = sample_in_box(outer, space_size, rng);
  auto k = static_cast<std::size_t>(rng() % outer.dim());
  bool up = uniform01(rng) < 0.5;
  p[outer.var(k)] = up ? uniform(rng, inner.axis(k).hi, outer.axis(k).hi) : uniform(rng, outer.axis(k).lo, inner.axis(k).lo);
  return p;
}

/// Subset of `candidates` (ids into `conds`) that first fail on the thinnest
/// shell around b. Predicates whose variables are already accounted for by an
/// earlier pick are skipped; empty when nothing fails.
inline std::vector<std::size_t> most_specific_conditions(const Box& b, std::size_t n,
                                                         const std::vector<std::size_t>& candidates,
                                                         const std::vector<Formula>& conds,
                                                         const std::vector<std::vector<VarIndex>>& vars, double alpha,
                                                         Rng& rng) {
  std::vector<std::size_t> s;
  std::set<VarIndex> dims;
  std::size_t sz = dense_size(b);
  auto ell = shell_schedule(alpha);
  for (std::size_t i = 0; i + 1 < ell.size(); ++i) {
    Box inner = scale_about_center(b, ell[i]);
    Box outer = scale_about_center(b, ell[i + 1]);
    std::vector<Point> samples;
    samples.reserve(n);
    for (std::size_t j = 0; j < n; ++j) samples.push_back(sample_between_boxes(inner, outer, sz, rng));
    for (auto c : candidates) {
      if (std::find(s.begin(), s.end(), c) != s.end()) continue;
      bool covered = std::all_of(vars[c].begin(), vars[c].end(), [&](VarIndex v) { return dims.count(v) != 0; });
      if (covered) continue;
      for (const auto& v : samples)
        if (!eval_point(conds[c], v)) {
          s.push_back(c);
          dims.insert(vars[c].begin(), vars[c].end());
          break;
        }
    }
    if (dims.size() == b.dim()) break;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Covering

/// Greedy multivariate cover. `bs_to_ps[b]` lists candidate ids for box b;
/// returns, for every chosen candidate, the boxes it was chosen for.
inline CondToBoxes get_max_cover(const std::vector<std::vector<std::size_t>>& bs_to_ps_in,
                                 const std::function<std::vector<VarIndex>(std::size_t)>& free_vars, Rng& rng) {
  std::map<std::size_t, BoxSet> bs_to_ps;  // box -> remaining candidates (as set of ids)
  std::map<std::size_t, BoxSet> ps_to_bs;
  std::map<std::size_t, std::set<VarIndex>> covered;
  for (std::size_t b = 0; b < bs_to_ps_in.size(); ++b) {
    if (bs_to_ps_in[b].empty()) continue;
    for (auto p : bs_to_ps_in[b]) {
      bs_to_ps[b].insert(p);
      ps_to_bs[p].insert(b);
    }
  }
  std::map<std::size_t, std::vector<VarIndex>> fv;
  for (const auto& [p, _] : ps_to_bs) fv[p] = free_vars(p);

  CondToBoxes max_ps_to_bs;
  while (!bs_to_ps.empty()) {
    // Score: boxes with open variables p would constrain; ties go to the
    // larger number of newly constrained (box, variable) slots, then to a
    // uniform pick among the remaining ties.
    std::optional<std::size_t> max_p;
    BoxSet chosen;
    std::size_t best_slots = 0, ties = 0;
    for (const auto& [p, bs] : ps_to_bs) {
      if (bs.empty()) continue;
      std::size_t slots = 0;
      for (auto b : bs) {
        auto it = covered.find(b);
        for (auto v : fv[p]) slots += it == covered.end() || it->second.count(v) == 0;
      }
      bool better = !max_p || bs.size() > chosen.size() || (bs.size() == chosen.size() && slots > best_slots);
      bool tie = max_p && bs.size() == chosen.size() && slots == best_slots;
      if (tie) ++ties;
      if (better || (tie && uniform01(rng) * static_cast<double>(ties) < 1.0)) {
        if (better) ties = 1;
        max_p = p;
        chosen = bs;
        best_slots = slots;
      }
    }
    if (!max_p) break;  // unreachable for well-formed input
    max_ps_to_bs[*max_p].insert(chosen.begin(), chosen.end());
    for (auto b : chosen) {
      auto& cov = covered[b];
      cov.insert(fv[*max_p].begin(), fv[*max_p].end());
      auto& ps = bs_to_ps[b];
      for (auto it = ps.begin(); it != ps.end();) {
        const auto& v = fv[*it];
        if (std::all_of(v.begin(), v.end(), [&](VarIndex x) { return cov.count(x) != 0; })) {
          ps_to_bs[*it].erase(b);
          it = ps.erase(it);
        } else {
          ++it;
        }
      }
      if (ps.empty()) bs_to_ps.erase(b);
    }
  }
  return max_ps_to_bs;
}

/// For each box, the set of chosen candidates covering it; duplicates collapsed.
inline std::vector<std::vector<std::size_t>> reverse_out(const CondToBoxes& max_ps_to_bs) {
  std::map<std::size_t, std::vector<std::size_t>> per_box;
  for (const auto& [p, bs] : max_ps_to_bs)
    for (auto b : bs) per_box[b].push_back(p);
  std::set<std::vector<std::size_t>> uniq;
  for (auto& [b, ps] : per_box)
    if (!ps.empty()) uniq.insert(ps);
  return {uniq.begin(), uniq.end()};
}

/// Conjoins each set of conditions; singletons stay as they are.
inline std::vector<Condition> couple(const std::vector<std::vector<std::size_t>>& sets, const ConditionTable& t) {
  std::vector<Condition> out;
  for (const auto& s : sets) {
    if (s.size() == 1) {
      out.push_back(t.at(s[0]));
      continue;
    }
    std::vector<Literal> lits;
    for (auto id : s) {
      const auto& m = t.at(id).members();
      lits.insert(lits.end(), m.begin(), m.end());
    }
    out.emplace_back(std::move(lits));
  }
  return out;
}

inline std::vector<VarIndex> literal_vars(const Literal& l, const DomainPack& pack) {
  return condition_vars(Condition(l), pack);
}

/// Cover plus coupling; new conjunctions are interned and all ids returned.
inline std::vector<std::size_t> multivariate_set_cover(const std::vector<std::vector<std::size_t>>& bs_to_cs,
                                                       ConditionTable& t, const DomainPack& pack, Rng& rng) {
  auto fv = [&](std::size_t id) { return condition_vars(t.at(id), pack); };
  auto conds = couple(reverse_out(get_max_cover(bs_to_cs, fv, rng)), t);
  std::vector<std::size_t> ids;
  for (const auto& c : conds) ids.push_back(t.intern(c));
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

/// Conjunctions missing from `cs_to_bs` get the intersection of their
/// literals' box sets.
inline CondToBoxes handle_new_conjunctions(const std::vector<std::size_t>& cs, CondToBoxes cs_to_bs,
                                           ConditionTable& t) {
  for (auto c : cs) {
    if (cs_to_bs.count(c) != 0) continue;
    const Condition& cond = t.at(c);
    if (!cond.is_conjunction()) continue;
    static const BoxSet kNone;
    std::vector<const BoxSet*> parts;
    for (const auto& lit : cond.members()) {
      auto it = cs_to_bs.find(t.intern(Condition(lit)));
      parts.push_back(it == cs_to_bs.end() ? &kNone : &it->second);
    }
    std::sort(parts.begin(), parts.end(), [](const BoxSet* a, const BoxSet* b) { return a->size() < b->size(); });
    std::optional<BoxSet> acc;
    for (const auto* bs : parts) {
      if (!acc) {
        acc = *bs;
      } else {
        for (auto it = acc->begin(); it != acc->end();) it = bs->count(*it) ? std::next(it) : acc->erase(it);
      }
      if (acc->empty()) break;
    }
    cs_to_bs[c] = acc.value_or(BoxSet{});
  }
  return cs_to_bs;
}

struct Volumes {
  std::map<std::size_t, double> total, unique;
};

/// Normalized total and unique volume of each condition in `cs`, counting
/// only the associations of conditions in `cs`.
inline Volumes volumes_covered(const std::vector<Box>& bs, const std::vector<std::size_t>& cs,
                               const CondToBoxes& cs_to_bs) {
  std::vector<std::vector<std::size_t>> bs_to_cs(bs.size());
  for (auto c : cs) {
    auto it = cs_to_bs.find(c);
    if (it == cs_to_bs.end()) continue;
    for (auto b : it->second)
      if (b < bs.size()) bs_to_cs[b].push_back(c);
  }
  Volumes v;
  for (auto c : cs) v.total[c] = v.unique[c] = 0.0;
  double tv = 0.0;
  for (std::size_t b = 0; b < bs.size(); ++b) {
    double vol = box_volume(bs[b]);
    tv += vol;
    for (auto c : bs_to_cs[b]) {
      v.total[c] += vol;
      if (bs_to_cs[b].size() == 1) v.unique[c] += vol;
    }
  }
  if (tv == 0.0) tv = 1.0;
  for (auto& [c, x] : v.total) x /= tv;
  for (auto& [c, x] : v.unique) x /= tv;
  return v;
}

/// True when some condition of `cs` holds at every point of b: cheap sampled
/// refutation first, then a universal check of the disjunction.
inline bool disjunct_covers_box(const Box& b, const std::vector<const Formula*>& cs, std::size_t n_samples, Rng& rng,
                                const Decider& dec) {
  // Disjuncts that are certainly false on b cannot help; one that is
  // certainly true settles it.
  std::vector<const Formula*> live;
  for (const auto* f : cs) {
    Tri t = three_valued_eval(*f, b);
    if (t == Tri::CertainTrue) return true;
    if (t != Tri::CertainFalse) live.push_back(f);
  }
  if (live.empty()) return false;
  std::size_t sz = dense_size(b);
  for (std::size_t i = 0; i < n_samples; ++i) {
    Point v = sample_in_box(b, sz, rng);
    bool any = false;
    for (const auto* f : live)
      if (eval_point(*f, v)) {
        any = true;
        break;
      }
    if (!any) return false;
  }
  std::vector<Formula> fs;
  fs.reserve(live.size());
  for (const auto* f : live) fs.push_back(*f);
  return dec.forall_holds(Formula::any_of(std::move(fs)), b).proven();
}

inline bool disjunct_covers_box(const Box& b, const std::vector<Formula>& cs, std::size_t n_samples, Rng& rng,
                                const Decider& dec) {
  std::vector<const Formula*> ps;
  for (const auto& f : cs) ps.push_back(&f);
  return disjunct_covers_box(b, ps, n_samples, rng, dec);
}

/// Drops conditions whose boxes stay covered by the rest. Box ranges go
/// first, then conjunctions, then the rest; ascending unique volume inside
/// each group.
inline std::vector<std::size_t> remove_implied(const std::vector<std::size_t>& cs, const CondToBoxes& cs_to_bs,
                                               const std::map<std::size_t, double>& uv, const ConditionTable& t,
                                               const DomainPack& pack, const std::vector<Box>& bs,
                                               std::size_t n_samples, Rng& rng, const Decider& dec = Decider{}) {
  std::vector<std::size_t> groups[3];
  for (auto c : cs) {
    const auto& cond = t.at(c);
    groups[cond.is_box_range() ? 0 : cond.is_conjunction() ? 1 : 2].push_back(c);
  }
  auto uv_of = [&](std::size_t c) {
    auto it = uv.find(c);
    return it == uv.end() ? 0.0 : it->second;
  };
  for (auto& g : groups)
    std::stable_sort(g.begin(), g.end(), [&](std::size_t a, std::size_t b) { return uv_of(a) < uv_of(b); });

  std::map<std::size_t, Formula> formula;
  for (auto c : cs) formula.emplace(c, condition_formula(t.at(c), pack));

  // Per box, the conditions that are not certainly false on it, computed once
  // and split by whether they certainly hold. Only these can help cover the
  // box. Entries of removed conditions are dropped lazily.
  struct Relevant {
    std::vector<std::size_t> certain, maybe;
    std::vector<std::size_t> ids;             // sorted, never compacted
  };
  std::vector<std::optional<Relevant>> relevant(bs.size());
  auto relevant_for = [&](std::size_t b) -> Relevant& {
    auto& r = relevant.at(b);
    if (!r) {
      r.emplace();
      for (auto c : cs) {
        Tri v = three_valued_eval(formula.at(c), bs[b]);
        if (v == Tri::CertainTrue) r->certain.push_back(c);
        else if (v == Tri::Unknown) r->maybe.push_back(c);
        else continue;
        r->ids.push_back(c);
      }
      std::sort(r->ids.begin(), r->ids.end());
    }
    return *r;
  };
  std::vector<char> alive(t.size(), 0);
  for (auto c : cs) alive.at(c) = 1;

  std::vector<std::size_t> kept = cs;
  BoxSet always;
  for (const auto& g : groups)
    for (auto c : g) {
      if (!alive[c]) continue;  // already gone (duplicate id)
      const BoxSet* own = nullptr;
      if (auto it = cs_to_bs.find(c); it != cs_to_bs.end()) own = &it->second;
      auto covered = [&](std::size_t b) {
        auto& r = relevant_for(b);
        // Order inside either list does not affect the verdict, so dead
        // entries are swap-removed as they are met.
        for (std::size_t i = 0; i < r.certain.size();) {
          auto k = r.certain[i];
          if (!alive[k]) {
            r.certain[i] = r.certain.back();
            r.certain.pop_back();
          } else if (k != c) {
            return true;
          } else {
            ++i;
          }
        }
        std::vector<const Formula*> live;
        for (std::size_t i = 0; i < r.maybe.size();) {
          auto k = r.maybe[i];
          if (!alive[k]) {
            r.maybe[i] = r.maybe.back();
            r.maybe.pop_back();
            continue;
          }
          if (k != c) live.push_back(&formula.at(k));
          ++i;
        }
        return disjunct_covers_box(bs.at(b), live, n_samples, rng, dec);
      };
      bool remove = true;
      // Boxes in `always` were proven covered by the conditions alive at the
      // time; dropping c changes nothing for a box on which c is certainly false.
      for (auto b : always) {
        if (own && own->count(b)) continue;
        const auto& ids = relevant_for(b).ids;
        if (!std::binary_search(ids.begin(), ids.end(), c)) continue;
        if (!covered(b)) {
          remove = false;
          break;
        }
      }
      if (remove && own)
        for (auto b : *own)
          if (!covered(b)) {
            remove = false;
            break;
          }
      if (remove) {
        alive[c] = 0;
        kept.erase(std::remove(kept.begin(), kept.end(), c), kept.end());
        if (own) always.insert(own->begin(), own->end());
      }
    }
  return kept;
}

/// Merges the boxes of box-range conditions in `covering` and replaces those
/// conditions with ranges over the merged boxes. Each new range is associated
/// with the boxes of the old ranges it contains.
inline std::pair<std::vector<std::size_t>, CondToBoxes> merge_box_range(const std::vector<std::size_t>& covering,
                                                                         CondToBoxes cs_to_bs, ConditionTable& t,
                                                                         const std::vector<Box>& bs,
                                                                         const MergeParams& mp) {
  std::vector<std::size_t> out, ranges;
  for (auto c : covering) (t.at(c).is_box_range() ? ranges : out).push_back(c);
  if (ranges.empty()) return {covering, std::move(cs_to_bs)};
  std::vector<Box> boxes;
  BoxSet old_boxes;
  for (auto c : ranges) {
    boxes.push_back(std::get<BoxRange>(t.at(c).members()[0]).box);
    if (auto it = cs_to_bs.find(c); it != cs_to_bs.end()) old_boxes.insert(it->second.begin(), it->second.end());
  }
  for (auto& m : merge_boxes(std::move(boxes), mp)) {
    auto id = t.intern(Condition::box_range(m));
    BoxSet mine;
    for (auto b : old_boxes)
      if (m.contains(bs.at(b))) mine.insert(b);
    cs_to_bs[id] = std::move(mine);
    if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
  }
  return {out, std::move(cs_to_bs)};
}

// ---------------------------------------------------------------------------
// Whole pipeline

struct DescribedCondition {
  Condition condition;
  double unique_volume = 0.0;
  double total_volume = 0.0;
  BoxSet boxes;
};

struct Description {
  std::vector<DescribedCondition> items;
  std::vector<Box> boxes;

  Formula formula(const DomainPack& pack) const {
    std::vector<Formula> ds;
    for (const auto& it : items) ds.push_back(condition_formula(it.condition, pack));
    return Formula::any_of(std::move(ds));
  }
};

inline const char* kNoSituation = "No Situation Corresponds to the Event User Described Occurring";

class NoSituationError : public Error {
 public:
  NoSituationError() : Error(kNoSituation) {}
};

struct InitialConditions {
  std::vector<std::pair<std::size_t, std::size_t>> cs_and_bs;     // (condition, box)
  std::vector<std::vector<std::size_t>> bs_and_good_cs;           // per box
};

/// Vocabulary for boxes over `vars`: non-ignored predicates mentioning only those variables.
inline std::vector<std::size_t> describable_predicates(const DomainPack& pack, const std::vector<VarIndex>& vars,
                                                       const std::set<std::size_t>& ignored) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pack.predicates().size(); ++i) {
    if (ignored.count(i) != 0) continue;
    const auto& fv = pack.predicate(i).free_vars;
    if (std::all_of(fv.begin(), fv.end(), [&](VarIndex v) { return std::binary_search(vars.begin(), vars.end(), v); }))
      out.push_back(i);
  }
  return out;
}

inline InitialConditions initial_conditions(const std::vector<Box>& bs, const std::vector<std::size_t>& cs,
                                            ConditionTable& t, const DomainPack& pack, const DescriptionOptions& opt,
                                            Rng& rng, const Decider& dec) {
  if (bs.empty()) throw NoSituationError();
  std::vector<Formula> fs;
  std::vector<std::vector<VarIndex>> vars;
  for (auto c : cs) {
    fs.push_back(condition_formula(t.at(c), pack));
    vars.push_back(condition_vars(t.at(c), pack));
  }
  InitialConditions ic;
  ic.bs_and_good_cs.resize(bs.size());
  for (std::size_t b = 0; b < bs.size(); ++b) {
    auto consistent = get_consistent_conditions(bs[b], opt.n_sample, fs, rng, dec);
    for (auto i : consistent) ic.cs_and_bs.emplace_back(cs[i], b);
    auto ms = most_specific_conditions(bs[b], opt.n_shell, consistent, fs, vars, opt.alpha, rng);
    auto& good = ic.bs_and_good_cs[b];
    if (ms.empty() || consistent.empty()) {
      if (!opt.produce_greater_abstraction || consistent.empty()) {
        auto id = t.intern(Condition::box_range(bs[b]));
        ic.cs_and_bs.emplace_back(id, b);
        good.push_back(id);
      } else {
        for (auto i : consistent) good.push_back(cs[i]);
      }
    } else {
      for (auto i : ms) good.push_back(cs[i]);
    }
  }
  return ic;
}

inline Description generate_description(const std::vector<Box>& bs, const DomainPack& pack,
                                        const DescriptionOptions& opt, Rng& rng, const Decider& dec = Decider{}) {
  if (bs.empty()) throw NoSituationError();
  ConditionTable t;
  std::vector<std::size_t> cs;
  for (auto p : describable_predicates(pack, bs.front().vars(), opt.ignored)) cs.push_back(t.intern(Condition::named(p)));

  auto ic = initial_conditions(bs, cs, t, pack, opt, rng, dec);
  auto covering = multivariate_set_cover(ic.bs_and_good_cs, t, pack, rng);

  CondToBoxes cs_to_bs;
  for (const auto& [c, b] : ic.cs_and_bs) cs_to_bs[c].insert(b);
  auto cs_to_bs2 = handle_new_conjunctions(covering, cs_to_bs, t);

  std::vector<std::vector<std::size_t>> bs_to_cs2(bs.size());
  for (auto c : covering)
    for (auto b : cs_to_bs2[c]) bs_to_cs2[b].push_back(c);
  auto covering2 = multivariate_set_cover(bs_to_cs2, t, pack, rng);

  std::vector<std::size_t> all(t.size());
  std::iota(all.begin(), all.end(), 0);
  auto cs_to_bs3 = handle_new_conjunctions(all, cs_to_bs, t);
  auto vols = volumes_covered(bs, covering2, cs_to_bs3);
  auto covering3 = remove_implied(covering2, cs_to_bs3, vols.unique, t, pack, bs, opt.n_prior_formal, rng, dec);
  auto [covering4, cs_to_bs4] = merge_box_range(covering3, cs_to_bs3, t, bs, opt.merge_params);
  auto fin = volumes_covered(bs, covering4, cs_to_bs4);

  Description d;
  d.boxes = bs;
  for (auto c : covering4) d.items.push_back({t.at(c), fin.unique[c], fin.total[c], cs_to_bs4[c]});
  std::sort(d.items.begin(), d.items.end(), [](const DescribedCondition& a, const DescribedCondition& b) {
    if (a.unique_volume != b.unique_volume) return a.unique_volume > b.unique_volume;
    if (a.total_volume != b.total_volume) return a.total_volume > b.total_volume;
    return a.condition.key() < b.condition.key();
  });
  return d;
}

// ---------------------------------------------------------------------------
// Rendering

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string render_literal(const Literal& l, const DomainPack& pack) {
  if (const auto* p = std::get_if<PredicateRef>(&l)) return pack.predicate(p->index).name;
  const auto& b = std::get<BoxRange>(l).box;
  std::string s = "box(";
  for (std::size_t k = 0; k < b.dim(); ++k) {
    if (k) s += ", ";
    s += pack.space().var(b.var(k)).name + " in [" + format_number(b.axis(k).lo) + ", " +
         format_number(b.axis(k).hi) + "]";
  }
  return s + ")";
}

inline std::string render_condition(const Condition& c, const DomainPack& pack) {
  if (c.members().size() == 1) return render_literal(c.members()[0], pack);
  std::string s = "and(";
  for (std::size_t i = 0; i < c.members().size(); ++i) {
    if (i) s += ", ";
    s += render_literal(c.members()[i], pack);
  }
  return s + ")";
}

/// One line per condition: "[uv tv] condition", in description order.
inline std::string render_description(const Description& d, const DomainPack& pack) {
  std::string out;
  char buf[64];
  for (const auto& it : d.items) {
    std::snprintf(buf, sizeof buf, "[%.4f %.4f] ", it.unique_volume, it.total_volume);
    out += buf + render_condition(it.condition, pack) + "\n";
  }
  return out;
}

}  // namespace illum
