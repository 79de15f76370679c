#pragma once

// Domain packs (variables plus grounded predicates), the question taxonomy,
// and description conditions.

#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "illum/core.hpp"
#include "illum/formula.hpp"

namespace illum {

enum class RoleTag { InputSpace, OutputSpace, Joint };
enum class AbstractLabel { MA, LA };

struct Predicate {
  std::string name;
  Formula formula;
  std::vector<VarIndex> free_vars;
  RoleTag tag = RoleTag::Joint;
  std::optional<AbstractLabel> label;
};

class DomainPack {
 public:
  DomainPack() = default;
  DomainPack(std::string name, Space space) : name_(std::move(name)), space_(std::move(space)) {}

  const std::string& name() const { return name_; }
  const Space& space() const { return space_; }
  const std::vector<Predicate>& predicates() const { return preds_; }
  const Predicate& predicate(std::size_t i) const { return preds_.at(i); }

  std::size_t add_predicate(std::string name, Formula f, RoleTag tag,
                            std::optional<AbstractLabel> label = std::nullopt) {
    if (name.empty()) throw Error("predicate with empty name");
    if (index_.count(name) != 0) throw Error("duplicate predicate '" + name + "'");
    for (auto v : f.free_vars())
      if (v >= space_.size()) throw Error("predicate '" + name + "' references an unknown variable");
    Predicate p{name, std::move(f), {}, tag, label};
    p.free_vars = p.formula.free_vars();
    preds_.push_back(std::move(p));
    index_.emplace(preds_.back().name, preds_.size() - 1);
    return preds_.size() - 1;
  }

  std::optional<std::size_t> find(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t require(const std::string& name) const {
    auto i = find(name);
    if (!i) throw Error("unknown predicate '" + name + "'");
    return *i;
  }

  void set_label(std::size_t i, std::optional<AbstractLabel> l) { preds_.at(i).label = l; }

 private:
  std::string name_;
  Space space_;
  std::vector<Predicate> preds_;
  std::map<std::string, std::size_t> index_;
};

// ---------------------------------------------------------------------------
// Questions

enum class QuestionType { WhenDoYou, WhatDoYouDoWhen, Circumstances };
enum class Strength { Strict, Usually };
enum class Side { Input, Output, Joint };

struct Question {
  QuestionType type = QuestionType::WhenDoYou;
  Strength strength = Strength::Strict;
  /// DNF: outer list is the disjunction, inner lists are conjunctions of predicate names.
  std::vector<std::vector<std::string>> content;

  friend bool operator==(const Question&, const Question&) = default;
};

struct QuestionLimits {
  std::size_t max_disjuncts = 4;
  std::size_t max_conjuncts = 4;
};

/// Predicate role a question type accepts in its content; nullopt = unrestricted.
inline std::optional<RoleTag> accepted_role(QuestionType t) {
  switch (t) {
    case QuestionType::WhenDoYou: return RoleTag::OutputSpace;
    case QuestionType::WhatDoYouDoWhen: return RoleTag::InputSpace;
    case QuestionType::Circumstances: return std::nullopt;
  }
  return std::nullopt;
}

inline Side illuminated_side(QuestionType t) {
  switch (t) {
    case QuestionType::WhenDoYou: return Side::Input;
    case QuestionType::WhatDoYouDoWhen: return Side::Output;
    case QuestionType::Circumstances: return Side::Joint;
  }
  return Side::Joint;
}

inline bool predicate_allowed(const Predicate& p, QuestionType t) {
  auto r = accepted_role(t);
  return !r || p.tag == *r;
}

inline const char* role_tag_name(RoleTag t) {
  switch (t) {
    case RoleTag::InputSpace: return "input";
    case RoleTag::OutputSpace: return "output";
    case RoleTag::Joint: return "joint";
  }
  return "?";
}

/// Table-1 restriction check. Returns the (possibly empty) list of
/// violations; throws on an unknown predicate name.
inline std::vector<std::string> validate_question(const Question& q, const DomainPack& pack,
                                                  const QuestionLimits& limits = {}) {
  std::vector<std::string> out;
  if (q.content.empty()) out.emplace_back("question content is empty");
  if (q.content.size() > limits.max_disjuncts)
    out.push_back("too many disjuncts: " + std::to_string(q.content.size()) + " > " +
                  std::to_string(limits.max_disjuncts));
  std::set<std::vector<std::string>> seen;
  for (const auto& conj : q.content) {
    if (conj.empty()) out.emplace_back("empty conjunct list");
    if (conj.size() > limits.max_conjuncts)
      out.push_back("too many conjuncts: " + std::to_string(conj.size()) + " > " +
                    std::to_string(limits.max_conjuncts));
    std::set<std::string> members;
    for (const auto& name : conj) {
      const auto& p = pack.predicate(pack.require(name));
      if (!members.insert(name).second) out.push_back("predicate '" + name + "' repeated in a conjunction");
      if (!predicate_allowed(p, q.type)) {
        const char* side = q.type == QuestionType::WhenDoYou ? "input" : "output";
        out.push_back("predicate '" + name + "' is " + role_tag_name(p.tag) +
                      "-tagged; this question type cannot contain " + side + "-space predicates");
      }
    }
    std::vector<std::string> key(members.begin(), members.end());
    if (!key.empty() && !seen.insert(key).second) out.emplace_back("duplicate disjunct");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Conditions: atomic named predicates, box-range fallbacks, or conjunctions of them.

struct PredicateRef {
  std::size_t index = 0;
  friend bool operator==(const PredicateRef&, const PredicateRef&) = default;
};

struct BoxRange {
  Box box;
  friend bool operator==(const BoxRange&, const BoxRange&) = default;
};

using Literal = std::variant<PredicateRef, BoxRange>;

inline std::string hexfloat(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

inline std::string literal_key(const Literal& l) {
  if (const auto* p = std::get_if<PredicateRef>(&l)) return "p" + std::to_string(p->index);
  const auto& b = std::get<BoxRange>(l).box;
  std::string s = "b";
  for (std::size_t k = 0; k < b.dim(); ++k)
    s += ":" + std::to_string(b.var(k)) + "[" + hexfloat(b.axis(k).lo) + "," + hexfloat(b.axis(k).hi) + "]";
  return s;
}

inline bool literal_less(const Literal& a, const Literal& b) {
  if (a.index() != b.index()) return a.index() < b.index();
  if (const auto* pa = std::get_if<PredicateRef>(&a)) return pa->index < std::get<PredicateRef>(b).index;
  const auto& ba = std::get<BoxRange>(a).box;
  const auto& bb = std::get<BoxRange>(b).box;
  if (ba.vars() != bb.vars()) return ba.vars() < bb.vars();
  for (std::size_t k = 0; k < ba.dim(); ++k) {
    if (ba.axis(k).lo != bb.axis(k).lo) return ba.axis(k).lo < bb.axis(k).lo;
    if (ba.axis(k).hi != bb.axis(k).hi) return ba.axis(k).hi < bb.axis(k).hi;
  }
  return false;
}

/// A conjunction of distinct literals in canonical order. One literal is an
/// atomic condition; two or more form a conjunction.
class Condition {
 public:
  Condition() = default;
  explicit Condition(Literal l) { members_.push_back(std::move(l)); }
  explicit Condition(std::vector<Literal> ls) : members_(std::move(ls)) {
    std::sort(members_.begin(), members_.end(), literal_less);
    members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
  }

  static Condition named(std::size_t pred) { return Condition(Literal{PredicateRef{pred}}); }
  static Condition box_range(Box b) { return Condition(Literal{BoxRange{std::move(b)}}); }

  const std::vector<Literal>& members() const { return members_; }
  bool is_conjunction() const { return members_.size() > 1; }
  bool is_box_range() const { return members_.size() == 1 && std::holds_alternative<BoxRange>(members_[0]); }
  bool is_named() const { return members_.size() == 1 && std::holds_alternative<PredicateRef>(members_[0]); }

  std::string key() const {
    std::string s;
    for (const auto& m : members_) {
      if (!s.empty()) s += "&";
      s += literal_key(m);
    }
    return s;
  }

  friend bool operator==(const Condition&, const Condition&) = default;

 private:
  std::vector<Literal> members_;
};

inline Formula literal_formula(const Literal& l, const DomainPack& pack) {
  if (const auto* p = std::get_if<PredicateRef>(&l)) return pack.predicate(p->index).formula;
  const auto& b = std::get<BoxRange>(l).box;
  std::vector<Formula> parts;
  for (std::size_t k = 0; k < b.dim(); ++k) parts.push_back(Formula::in_range(b.var(k), b.axis(k)));
  return Formula::all_of(std::move(parts));
}

inline Formula condition_formula(const Condition& c, const DomainPack& pack) {
  if (c.members().size() == 1) return literal_formula(c.members()[0], pack);
  std::vector<Formula> parts;
  for (const auto& m : c.members()) parts.push_back(literal_formula(m, pack));
  return Formula::all_of(std::move(parts));
}

inline std::vector<VarIndex> condition_vars(const Condition& c, const DomainPack& pack) {
  std::vector<VarIndex> out;
  for (const auto& m : c.members()) {
    if (const auto* p = std::get_if<PredicateRef>(&m)) {
      const auto& fv = pack.predicate(p->index).free_vars;
      out.insert(out.end(), fv.begin(), fv.end());
    } else {
      const auto& v = std::get<BoxRange>(m).box.vars();
      out.insert(out.end(), v.begin(), v.end());
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace illum
