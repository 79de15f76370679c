#pragma once

// Universal and existential checks of formulas over boxes.

#include <optional>

#include "illum/formula.hpp"
#include "illum/smt.hpp"

namespace illum {

enum class VerdictValue { Proven, Refuted, Unknown };

struct Verdict {
  VerdictValue value = VerdictValue::Unknown;
  std::optional<Point> witness;
  std::string diagnostic;

  bool proven() const { return value == VerdictValue::Proven; }
  bool refuted() const { return value == VerdictValue::Refuted; }
};

inline const char* verdict_name(VerdictValue v) {
  switch (v) {
    case VerdictValue::Proven: return "proven";
    case VerdictValue::Refuted: return "refuted";
    case VerdictValue::Unknown: return "unknown";
  }
  return "?";
}

inline std::size_t dense_size(const Box& b) { return b.empty() ? 0 : b.vars().back() + 1; }

inline bool vars_within(const Formula& f, const Box& b) {
  for (auto v : f.free_vars())
    if (b.find(v) == nullptr) return false;
  return true;
}

/// First of `n` uniform samples in `b` satisfying `f`, if any.
inline std::optional<Point> sample_feasibility(const Formula& f, const Box& b, std::size_t n, Rng& rng) {
  std::size_t sz = dense_size(b);
  for (std::size_t i = 0; i < n; ++i) {
    Point p = sample_in_box(b, sz, rng);
    if (eval_point(f, p)) return p;
  }
  return std::nullopt;
}

namespace decision_detail {

// Box vertex maximizing (or minimizing) the atom's affine form.
inline Point extreme_vertex(const Atom& a, const Box& b, bool maximize) {
  Point p = b.center(dense_size(b));
  for (const auto& t : a.terms) {
    const Interval* iv = b.find(t.var);
    bool up = (t.coeff > 0.0) == maximize;
    p[t.var] = up ? iv->hi : iv->lo;
  }
  return p;
}

// Cheap candidate points: the extreme vertices of every atom, then the center.
// Returns the first point on which `f` evaluates to `want`.
inline std::optional<Point> vertex_probe(const Formula& f, const Box& b, bool want) {
  std::optional<Point> hit;
  f.for_each_atom([&](const Atom& a) {
    if (hit) return;
    for (bool mx : {true, false}) {
      Point p = extreme_vertex(a, b, mx);
      if (eval_point(f, p) == want) {
        hit = std::move(p);
        return;
      }
    }
  });
  if (!hit) {
    Point c = b.center(dense_size(b));
    if (eval_point(f, c) == want) hit = std::move(c);
  }
  return hit;
}

// Bisects the widest axis among f's variables until every piece is certainly
// true. Gives up (false) once `budget` splits are spent or a piece is not
// certainly true and cannot be split further.
inline bool prove_by_splitting(const Formula& f, const Box& b, std::size_t& budget) {
  Tri t = three_valued_eval(f, b);
  if (t == Tri::CertainTrue) return true;
  if (t == Tri::CertainFalse || budget == 0) return false;
  auto fv = f.free_vars();
  std::size_t best = b.dim();
  double w = 0.0;
  for (std::size_t k = 0; k < b.dim(); ++k)
    if (std::binary_search(fv.begin(), fv.end(), b.var(k)) && b.axis(k).width() > w) {
      w = b.axis(k).width();
      best = k;
    }
  if (best == b.dim()) return false;
  double m = b.axis(best).mid();
  if (!(b.axis(best).lo < m && m < b.axis(best).hi)) return false;
  --budget;
  Box lo = b, hi = b;
  lo.axis(best).hi = m;
  hi.axis(best).lo = m;
  return prove_by_splitting(f, lo, budget) && prove_by_splitting(f, hi, budget);
}

}  // namespace decision_detail

/// The built-in prover plus an optional external solver.
class Decider {
 public:
  Decider() = default;
  explicit Decider(std::optional<SmtConfig> smt, std::size_t split_budget = 32)
      : smt_(std::move(smt)), split_budget_(split_budget) {}

  std::size_t split_budget() const { return split_budget_; }
  void set_split_budget(std::size_t n) { split_budget_ = n; }

  bool has_smt() const { return smt_.has_value() && !smt_->command.empty(); }
  const std::optional<SmtConfig>& smt() const { return smt_; }

  /// Proven: f holds on every point of b. Refuted: a point of b falsifies f
  /// (the witness is attached unless only the solver found it).
  Verdict forall_holds(const Formula& f, const Box& b) const {
    if (!vars_within(f, b)) return {VerdictValue::Unknown, std::nullopt, "formula mentions variables outside the box"};
    Tri t = three_valued_eval(f, b);
    if (t == Tri::CertainTrue) return {VerdictValue::Proven, std::nullopt, {}};
    if (auto w = decision_detail::vertex_probe(f, b, false)) return {VerdictValue::Refuted, std::move(w), {}};
    if (t == Tri::CertainFalse) return {VerdictValue::Refuted, b.center(dense_size(b)), {}};
    std::size_t budget = split_budget_;
    if (budget > 0 && decision_detail::prove_by_splitting(f, b, budget)) return {VerdictValue::Proven, std::nullopt, {}};
    if (has_smt()) {
      auto r = run_smt(*smt_, emit_smtlib(Quantifier::ForAll, f, b));
      if (r.answer == SmtAnswer::Unsat) return {VerdictValue::Proven, std::nullopt, {}};
      if (r.answer == SmtAnswer::Sat) return {VerdictValue::Refuted, std::nullopt, {}};
      return {VerdictValue::Unknown, std::nullopt, r.diagnostic};
    }
    return {};
  }

  /// Proven: some point of b satisfies f. Refuted: none does.
  Verdict exists_holds(const Formula& f, const Box& b) const {
    Verdict v = forall_holds(Formula::negation(f), b);
    if (v.value == VerdictValue::Proven) return {VerdictValue::Refuted, std::nullopt, {}};
    if (v.value == VerdictValue::Refuted) return {VerdictValue::Proven, std::move(v.witness), {}};
    return {VerdictValue::Unknown, std::nullopt, std::move(v.diagnostic)};
  }

 private:
  std::optional<SmtConfig> smt_;
  std::size_t split_budget_ = 32;
};

/// Convenience wrapper using only the built-in prover.
inline Verdict forall_holds(const Formula& f, const Box& b, const Decider& d = Decider{}) {
  return d.forall_holds(f, b);
}

}  // namespace illum
