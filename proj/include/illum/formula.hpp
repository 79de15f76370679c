#pragma once

// Quantifier-free formulas over affine atoms, with exact point evaluation and
// a sound three-valued evaluation over boxes.

#include <cmath>
#include <string>
#include <vector>

#include "illum/core.hpp"

namespace illum {

enum class Relation { Le, Lt, Eq, Ge, Gt };

struct Term {
  VarIndex var = 0;
  double coeff = 0.0;
  friend bool operator==(const Term&, const Term&) = default;
};

/// sum(coeff_i * x_i) + constant  <rel>  0
struct Atom {
  std::vector<Term> terms;
  double constant = 0.0;
  Relation rel = Relation::Le;
  friend bool operator==(const Atom&, const Atom&) = default;
};

inline bool relation_holds(double v, Relation r) {
  switch (r) {
    case Relation::Le: return v <= 0.0;
    case Relation::Lt: return v < 0.0;
    case Relation::Eq: return v == 0.0;
    case Relation::Ge: return v >= 0.0;
    case Relation::Gt: return v > 0.0;
  }
  return false;
}

// Every evaluation of an affine form (points and box vertices alike) goes
// through this one routine. Each step (c*x, then s+t) is monotone under
// round-to-nearest, so the floating-point value at an interior point never
// leaves the range spanned by the same computation at the extreme vertices.
template <class Coord>
double affine_value(const Atom& a, Coord&& coord) {
  double s = 0.0;
  for (const auto& t : a.terms) s += t.coeff * coord(t);
  return s + a.constant;
}

enum class Tri { CertainFalse, CertainTrue, Unknown };

inline Tri tri_not(Tri t) {
  if (t == Tri::CertainTrue) return Tri::CertainFalse;
  if (t == Tri::CertainFalse) return Tri::CertainTrue;
  return Tri::Unknown;
}

class Formula {
 public:
  enum class Kind { Atom, And, Or, Not };

  Formula() : kind_(Kind::And) {}  // empty conjunction: true

  static Formula atom(Atom a) {
    Formula f;
    f.kind_ = Kind::Atom;
    f.atom_ = std::move(a);
    return f;
  }
  static Formula all_of(std::vector<Formula> cs) { return node(Kind::And, std::move(cs)); }
  static Formula any_of(std::vector<Formula> cs) { return node(Kind::Or, std::move(cs)); }
  static Formula negation(Formula c) {
    std::vector<Formula> v;
    v.push_back(std::move(c));
    return node(Kind::Not, std::move(v));
  }
  static Formula truth() { return all_of({}); }
  static Formula falsity() { return any_of({}); }

  /// lo <= x <= hi
  static Formula in_range(VarIndex v, Interval iv) {
    return all_of({atom({{{v, 1.0}}, -iv.lo, Relation::Ge}), atom({{{v, 1.0}}, -iv.hi, Relation::Le})});
  }

  Kind kind() const { return kind_; }
  const Atom& atom_value() const { return atom_; }
  const std::vector<Formula>& children() const { return children_; }

  void collect_vars(std::vector<VarIndex>& out) const {
    if (kind_ == Kind::Atom) {
      for (const auto& t : atom_.terms) out.push_back(t.var);
      return;
    }
    for (const auto& c : children_) c.collect_vars(out);
  }

  std::vector<VarIndex> free_vars() const {
    std::vector<VarIndex> v;
    collect_vars(v);
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  }

  template <class F>
  void for_each_atom(F&& f) const {
    if (kind_ == Kind::Atom) {
      f(atom_);
      return;
    }
    for (const auto& c : children_) c.for_each_atom(f);
  }

  friend bool operator==(const Formula&, const Formula&) = default;

 private:
  static Formula node(Kind k, std::vector<Formula> cs) {
    Formula f;
    f.kind_ = k;
    f.children_ = std::move(cs);
    return f;
  }

  Kind kind_;
  Atom atom_;
  std::vector<Formula> children_;
};

/// Standard boolean semantics; throws when a referenced variable is unassigned.
inline bool eval_point(const Formula& f, const Point& x) {
  switch (f.kind()) {
    case Formula::Kind::Atom: {
      double v = affine_value(f.atom_value(), [&](const Term& t) {
        double xv = t.var < x.size() ? x[t.var] : std::nan("");
        if (std::isnan(xv)) throw Error("eval_point: variable " + std::to_string(t.var) + " is unassigned");
        return xv;
      });
      return relation_holds(v, f.atom_value().rel);
    }
    case Formula::Kind::And:
      for (const auto& c : f.children())
        if (!eval_point(c, x)) return false;
      return true;
    case Formula::Kind::Or:
      for (const auto& c : f.children())
        if (eval_point(c, x)) return true;
      return false;
    case Formula::Kind::Not:
      return !eval_point(f.children().front(), x);
  }
  return false;
}

/// Minimum and maximum of the atom's affine form over `b`, evaluated at the
/// sign-selected extreme vertices. Returns false if a variable is missing.
inline bool affine_range(const Atom& a, const Box& b, double& min_v, double& max_v) {
  for (const auto& t : a.terms)
    if (b.find(t.var) == nullptr) return false;
  min_v = affine_value(a, [&](const Term& t) {
    const Interval* iv = b.find(t.var);
    return t.coeff > 0.0 ? iv->lo : iv->hi;
  });
  max_v = affine_value(a, [&](const Term& t) {
    const Interval* iv = b.find(t.var);
    return t.coeff > 0.0 ? iv->hi : iv->lo;
  });
  return true;
}

inline Tri atom_on_box(const Atom& a, const Box& b) {
  double mn = 0.0, mx = 0.0;
  if (!affine_range(a, b, mn, mx)) return Tri::Unknown;
  switch (a.rel) {
    case Relation::Le:
      if (mx <= 0.0) return Tri::CertainTrue;
      if (mn > 0.0) return Tri::CertainFalse;
      break;
    case Relation::Lt:
      if (mx < 0.0) return Tri::CertainTrue;
      if (mn >= 0.0) return Tri::CertainFalse;
      break;
    case Relation::Ge:
      if (mn >= 0.0) return Tri::CertainTrue;
      if (mx < 0.0) return Tri::CertainFalse;
      break;
    case Relation::Gt:
      if (mn > 0.0) return Tri::CertainTrue;
      if (mx <= 0.0) return Tri::CertainFalse;
      break;
    case Relation::Eq:
      if (mn == 0.0 && mx == 0.0) return Tri::CertainTrue;
      if (mn > 0.0 || mx < 0.0) return Tri::CertainFalse;
      break;
  }
  return Tri::Unknown;
}

/// Kleene evaluation over a box. CertainTrue/CertainFalse are sound for every
/// point of the box; atoms are decided exactly.
inline Tri three_valued_eval(const Formula& f, const Box& b) {
  switch (f.kind()) {
    case Formula::Kind::Atom:
      return atom_on_box(f.atom_value(), b);
    case Formula::Kind::And: {
      Tri acc = Tri::CertainTrue;
      for (const auto& c : f.children()) {
        Tri t = three_valued_eval(c, b);
        if (t == Tri::CertainFalse) return t;
        if (t == Tri::Unknown) acc = Tri::Unknown;
      }
      return acc;
    }
    case Formula::Kind::Or: {
      Tri acc = Tri::CertainFalse;
      for (const auto& c : f.children()) {
        Tri t = three_valued_eval(c, b);
        if (t == Tri::CertainTrue) return t;
        if (t == Tri::Unknown) acc = Tri::Unknown;
      }
      return acc;
    }
    case Formula::Kind::Not:
      return tri_not(three_valued_eval(f.children().front(), b));
  }
  return Tri::Unknown;
}

inline const char* relation_symbol(Relation r) {
  switch (r) {
    case Relation::Le: return "<=";
    case Relation::Lt: return "<";
    case Relation::Eq: return "=";
    case Relation::Ge: return ">=";
    case Relation::Gt: return ">";
  }
  return "?";
}

}  // namespace illum
