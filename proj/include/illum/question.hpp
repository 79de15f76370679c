#pragma once

// Text form of questions:
//   when_do_you out_high?
//   what_do_you_usually_do_when and(a, b) or c?
// Disjuncts are separated by " or "; a conjunction is and(p, q, ...).

#include <cctype>
#include <string>
#include <vector>

#include "illum/domain.hpp"

namespace illum {

struct QuestionKeyword {
  const char* text;
  QuestionType type;
  Strength strength;
};

inline const std::vector<QuestionKeyword>& question_keywords() {
  static const std::vector<QuestionKeyword> k = {
      {"when_do_you", QuestionType::WhenDoYou, Strength::Strict},
      {"when_do_you_usually", QuestionType::WhenDoYou, Strength::Usually},
      {"what_do_you_do_when", QuestionType::WhatDoYouDoWhen, Strength::Strict},
      {"what_do_you_usually_do_when", QuestionType::WhatDoYouDoWhen, Strength::Usually},
      {"what_are_the_circumstances_in_which", QuestionType::Circumstances, Strength::Strict},
      {"what_are_the_usual_circumstances_in_which", QuestionType::Circumstances, Strength::Usually},
  };
  return k;
}

inline std::string question_keyword(QuestionType t, Strength s) {
  for (const auto& k : question_keywords())
    if (k.type == t && k.strength == s) return k.text;
  return "?";
}

inline const char* question_type_name(QuestionType t) {
  switch (t) {
    case QuestionType::WhenDoYou: return "when_do_you";
    case QuestionType::WhatDoYouDoWhen: return "what_do_you_do_when";
    case QuestionType::Circumstances: return "what_are_the_circumstances_in_which";
  }
  return "?";
}

inline QuestionType parse_question_type(const std::string& s) {
  for (const auto& k : question_keywords())
    if (s == k.text && k.strength == Strength::Strict) return k.type;
  throw Error("unknown question type '" + s + "'");
}

class QuestionSyntaxError : public Error {
 public:
  using Error::Error;
};

namespace question_detail {

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  Question parse() {
    Question q;
    std::string kw = ident();
    bool found = false;
    for (const auto& k : question_keywords())
      if (kw == k.text) {
        q.type = k.type;
        q.strength = k.strength;
        found = true;
      }
    if (!found) fail("unknown question keyword '" + kw + "'");
    q.content.push_back(disjunct());
    for (;;) {
      skip();
      if (eat('?')) break;
      if (pos_ >= s_.size()) fail("question must end with '?'");
      std::string w = ident();
      if (w != "or") fail("expected 'or' or '?', found '" + w + "'");
      q.content.push_back(disjunct());
    }
    skip();
    if (pos_ != s_.size()) fail("text after '?'");
    return q;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw QuestionSyntaxError(why + " (at column " + std::to_string(pos_ + 1) + ")");
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  std::string ident() {
    skip();
    std::size_t st = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    if (st == pos_) fail("expected a name");
    return s_.substr(st, pos_ - st);
  }
  std::vector<std::string> disjunct() {
    std::string w = ident();
    if (w != "and") return {w};
    skip();
    if (!eat('(')) return {w};  // a predicate literally named "and"
    std::vector<std::string> out{ident()};
    while (eat(',')) out.push_back(ident());
    if (!eat(')')) fail("expected ')' to close and(");
    return out;
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace question_detail

/// Syntax only; role restrictions are checked by validate_question.
inline Question parse_question(const std::string& text) { return question_detail::Parser(text).parse(); }

inline std::string render_question(const Question& q) {
  std::string s = question_keyword(q.type, q.strength);
  for (std::size_t i = 0; i < q.content.size(); ++i) {
    s += i == 0 ? " " : " or ";
    const auto& c = q.content[i];
    if (c.size() == 1) {
      s += c[0];
      continue;
    }
    s += "and(";
    for (std::size_t j = 0; j < c.size(); ++j) s += (j ? ", " : "") + c[j];
    s += ")";
  }
  return s + "?";
}

/// Predicate names a question of this type may mention, in declaration order.
inline std::vector<std::string> allowed_predicates(const DomainPack& pack, QuestionType t) {
  std::vector<std::string> out;
  for (const auto& p : pack.predicates())
    if (predicate_allowed(p, t)) out.push_back(p.name);
  return out;
}

/// Completions for the last (possibly empty) token of a partially typed
/// question: keywords first, then predicates the chosen type accepts.
inline std::vector<std::string> complete_question(const std::string& line, const DomainPack& pack) {
  std::size_t st = line.size();
  while (st > 0 && (std::isalnum(static_cast<unsigned char>(line[st - 1])) || line[st - 1] == '_')) --st;
  std::string prefix = line.substr(st);
  auto starts = [&](const std::string& s) { return s.compare(0, prefix.size(), prefix) == 0; };
  std::vector<std::string> out;
  std::size_t first = line.find_first_not_of(" \t");
  if (first == std::string::npos || first == st) {
    for (const auto& k : question_keywords())
      if (starts(k.text)) out.emplace_back(k.text);
    return out;
  }
  std::size_t kw_end = line.find_first_of(" \t(", first);
  std::string kw = line.substr(first, kw_end - first);
  const QuestionKeyword* hit = nullptr;
  for (const auto& k : question_keywords())
    if (kw == k.text) hit = &k;
  if (hit == nullptr) return out;
  for (const auto& n : allowed_predicates(pack, hit->type))
    if (starts(n)) out.push_back(n);
  for (const char* w : {"and(", "or"})
    if (!prefix.empty() && starts(w)) out.emplace_back(w);
  return out;
}

}  // namespace illum
