#pragma once

// JSON file formats (domain packs, label sidecars, models, descriptions,
// reach-set dumps) and CSV ingestion for polynomial fitting.

#include <cctype>
#include <cstring>
#include <map>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "illum/description.hpp"
#include "illum/domain.hpp"
#include "illum/fit.hpp"
#include "illum/models.hpp"
#include "illum/reachability.hpp"

namespace illum {

using nlohmann::json;

inline constexpr int kFormatVersion = 1;

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json read_json_file(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(path + ": " + e.what());
  }
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("short write to '" + path + "'");
}

inline void check_version(const json& j, const char* what) {
  if (j.contains("v") && j.at("v").get<int>() != kFormatVersion)
    throw Error(std::string(what) + ": unsupported format version " + j.at("v").dump());
}

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Affine atoms as text: "x - 0.5*vx <= 0.2", "2 x + 1 > y".

namespace io_detail {

struct AffineExpr {
  std::vector<Term> terms;
  double constant = 0.0;
};

class AtomParser {
 public:
  AtomParser(const std::string& s, const Space& space) : s_(s), space_(space) {}

  Atom parse() {
    AffineExpr lhs = expr();
    Relation rel = relation();
    AffineExpr rhs = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + s_.substr(pos_) + "'");
    Atom a;
    std::map<VarIndex, double> acc;
    for (const auto& t : lhs.terms) acc[t.var] += t.coeff;
    for (const auto& t : rhs.terms) acc[t.var] -= t.coeff;
    for (const auto& [v, c] : acc)
      if (c != 0.0) a.terms.push_back({v, c});
    a.constant = lhs.constant - rhs.constant;
    a.rel = rel;
    if (a.terms.empty()) fail("atom has no variables");
    return a;
  }

 private:
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  [[noreturn]] void fail(const std::string& why) const { throw Error("atom '" + s_ + "': " + why); }

  bool number(double& out) {
    skip();
    const char* b = s_.c_str() + pos_;
    if (pos_ >= s_.size() || !(std::isdigit(static_cast<unsigned char>(*b)) || *b == '.')) return false;
    char* e = nullptr;
    out = std::strtod(b, &e);
    if (e == b) return false;
    pos_ += static_cast<std::size_t>(e - b);
    return true;
  }

  bool name(std::string& out) {
    skip();
    std::size_t st = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' || s_[pos_] == '.'))
      ++pos_;
    if (pos_ == st || std::isdigit(static_cast<unsigned char>(s_[st]))) {
      pos_ = st;
      return false;
    }
    out = s_.substr(st, pos_ - st);
    return true;
  }

  AffineExpr expr() {
    AffineExpr e;
    bool first = true;
    for (;;) {
      skip();
      double sign = 1.0;
      if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) {
        sign = s_[pos_] == '-' ? -1.0 : 1.0;
        ++pos_;
      } else if (!first) {
        return e;
      }
      first = false;
      double c = 1.0;
      bool has_num = number(c);
      skip();
      if (pos_ < s_.size() && s_[pos_] == '*') {
        ++pos_;
        if (!has_num) fail("'*' without a coefficient");
      }
      std::string v;
      if (name(v)) {
        auto idx = space_.index_of(v);
        if (!idx) fail("unknown variable '" + v + "'");
        e.terms.push_back({*idx, sign * c});
      } else if (has_num) {
        e.constant += sign * c;
      } else {
        fail("expected a number or variable");
      }
    }
  }

  Relation relation() {
    skip();
    auto at = [&](const char* op) { return s_.compare(pos_, std::strlen(op), op) == 0; };
    static const std::pair<const char*, Relation> ops[] = {{"<=", Relation::Le}, {">=", Relation::Ge},
                                                           {"==", Relation::Eq}, {"<", Relation::Lt},
                                                           {">", Relation::Gt},  {"=", Relation::Eq}};
    for (const auto& [op, r] : ops)
      if (at(op)) {
        pos_ += std::strlen(op);
        return r;
      }
    fail("expected a relation (<=, <, =, >=, >)");
  }

  const std::string& s_;
  const Space& space_;
  std::size_t pos_ = 0;
};

}  // namespace io_detail

inline Atom parse_atom(const std::string& s, const Space& space) { return io_detail::AtomParser(s, space).parse(); }

/// Round-trippable text form: every term on the left, the constant on the right.
inline std::string atom_to_string(const Atom& a, const Space& space) {
  std::string s;
  for (std::size_t i = 0; i < a.terms.size(); ++i) {
    const auto& t = a.terms[i];
    double c = t.coeff;
    if (i > 0) {
      s += c < 0 ? " - " : " + ";
      c = std::fabs(c);
    } else if (c < 0) {
      s += "-";
      c = -c;
    }
    if (c != 1.0) s += format_real(c) + "*";
    s += space.var(t.var).name;
  }
  return s + " " + relation_symbol(a.rel) + " " + format_real(a.constant == 0.0 ? 0.0 : -a.constant);
}

// Formulas: an atom string, {"and": [...]}, {"or": [...]}, {"not": f},
// {"range": {"x": [lo, hi], ...}}, or the literals true / false.
inline Formula formula_from_json(const json& j, const Space& space) {
  if (j.is_string()) return Formula::atom(parse_atom(j.get<std::string>(), space));
  if (j.is_boolean()) return j.get<bool>() ? Formula::truth() : Formula::falsity();
  if (!j.is_object() || j.size() != 1) throw Error("formula: expected an atom string or a one-key object");
  auto it = j.begin();
  auto list = [&] {
    std::vector<Formula> cs;
    for (const auto& c : it.value()) cs.push_back(formula_from_json(c, space));
    return cs;
  };
  if (it.key() == "and") return Formula::all_of(list());
  if (it.key() == "or") return Formula::any_of(list());
  if (it.key() == "not") return Formula::negation(formula_from_json(it.value(), space));
  if (it.key() == "range") {
    std::vector<Formula> cs;
    for (const auto& [v, b] : it.value().items())
      cs.push_back(Formula::in_range(space.require(v), Interval::checked(b.at(0).get<double>(), b.at(1).get<double>())));
    return cs.size() == 1 ? std::move(cs.front()) : Formula::all_of(std::move(cs));
  }
  throw Error("formula: unknown connective '" + it.key() + "'");
}

inline json formula_to_json(const Formula& f, const Space& space) {
  switch (f.kind()) {
    case Formula::Kind::Atom: return atom_to_string(f.atom_value(), space);
    case Formula::Kind::Not: return {{"not", formula_to_json(f.children().front(), space)}};
    case Formula::Kind::And:
    case Formula::Kind::Or: {
      json arr = json::array();
      for (const auto& c : f.children()) arr.push_back(formula_to_json(c, space));
      return {{f.kind() == Formula::Kind::And ? "and" : "or", arr}};
    }
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Domain packs

inline RoleTag parse_role_tag(const std::string& s) {
  if (s == "input") return RoleTag::InputSpace;
  if (s == "output") return RoleTag::OutputSpace;
  if (s == "joint") return RoleTag::Joint;
  throw Error("unknown role tag '" + s + "'");
}

inline std::optional<AbstractLabel> parse_label(const json& j) {
  if (j.is_null()) return std::nullopt;
  auto s = j.get<std::string>();
  if (s == "MA" || s == "ma") return AbstractLabel::MA;
  if (s == "LA" || s == "la") return AbstractLabel::LA;
  if (s.empty() || s == "none") return std::nullopt;
  throw Error("unknown abstractness label '" + s + "'");
}

/// A predicate's formula comes from "formula" (any formula form) or "dnf"
/// (a list of conjunctions of atom strings). The tag defaults to the side its
/// variables live on.
inline DomainPack pack_from_json(const json& j) {
  check_version(j, "domain pack");
  std::vector<Variable> vars;
  for (const auto& v : j.at("variables")) {
    auto role = v.at("role").get<std::string>();
    if (role != "input" && role != "output") throw Error("variable role must be input or output, got '" + role + "'");
    const auto& b = v.at("bounds");
    vars.push_back({v.at("name").get<std::string>(), role == "input" ? Role::Input : Role::Output,
                    Interval::checked(b.at(0).get<double>(), b.at(1).get<double>())});
  }
  DomainPack pack(j.value("name", "pack"), Space(std::move(vars)));
  const Space& space = pack.space();
  for (const auto& p : j.value("predicates", json::array())) {
    auto name = p.at("name").get<std::string>();
    Formula f;
    if (p.contains("formula")) {
      f = formula_from_json(p.at("formula"), space);
    } else if (p.contains("dnf")) {
      std::vector<Formula> ds;
      for (const auto& conj : p.at("dnf")) {
        std::vector<Formula> cs;
        for (const auto& a : conj) cs.push_back(formula_from_json(a, space));
        ds.push_back(cs.size() == 1 ? std::move(cs.front()) : Formula::all_of(std::move(cs)));
      }
      f = ds.size() == 1 ? std::move(ds.front()) : Formula::any_of(std::move(ds));
    } else {
      throw Error("predicate '" + name + "' has neither formula nor dnf");
    }
    RoleTag tag;
    if (p.contains("role")) {
      tag = parse_role_tag(p.at("role").get<std::string>());
    } else {
      bool in = false, out = false;
      for (auto v : f.free_vars()) (space.var(v).role == Role::Input ? in : out) = true;
      tag = in && out ? RoleTag::Joint : out ? RoleTag::OutputSpace : RoleTag::InputSpace;
    }
    pack.add_predicate(name, std::move(f), tag, parse_label(p.value("label", json())));
  }
  return pack;
}

inline json pack_to_json(const DomainPack& pack) {
  json vars = json::array();
  for (const auto& v : pack.space().variables())
    vars.push_back({{"name", v.name},
                    {"role", v.role == Role::Input ? "input" : "output"},
                    {"bounds", {v.bounds.lo, v.bounds.hi}}});
  json preds = json::array();
  for (const auto& p : pack.predicates()) {
    json e = {{"name", p.name}, {"role", role_tag_name(p.tag)}, {"formula", formula_to_json(p.formula, pack.space())}};
    if (p.label) e["label"] = *p.label == AbstractLabel::MA ? "MA" : "LA";
    preds.push_back(std::move(e));
  }
  return {{"v", kFormatVersion}, {"name", pack.name()}, {"variables", vars}, {"predicates", preds}};
}

/// Sidecar: {"v": 1, "labels": {"pred": "MA" | "LA" | null}}. Unknown names are errors.
inline void apply_labels(DomainPack& pack, const json& j) {
  check_version(j, "label file");
  for (const auto& [name, lab] : j.at("labels").items()) pack.set_label(pack.require(name), parse_label(lab));
}

inline DomainPack load_pack(const std::string& path, const std::string& labels_path = "") {
  DomainPack pack = pack_from_json(read_json_file(path));
  if (!labels_path.empty()) apply_labels(pack, read_json_file(labels_path));
  return pack;
}

// ---------------------------------------------------------------------------
// Models

inline std::vector<Layer> layers_from_json(const json& arr) {
  std::vector<Layer> layers;
  for (const auto& l : arr)
    layers.push_back({l.at("weights").get<std::vector<std::vector<double>>>(), l.at("bias").get<std::vector<double>>(),
                      parse_activation(l.value("activation", "identity"))});
  return layers;
}

/// Optional "standardize": {"mean": [...], "std": [...]} becomes a diagonal
/// identity-activation layer (x - mean) / std in front of the network.
inline std::shared_ptr<LearnedSystem> system_from_json(const json& j) {
  check_version(j, "model");
  auto kind = j.at("kind").get<std::string>();
  if (kind == "network") {
    auto layers = layers_from_json(j.at("layers"));
    if (j.contains("standardize")) {
      auto mean = j.at("standardize").at("mean").get<std::vector<double>>();
      auto sd = j.at("standardize").at("std").get<std::vector<double>>();
      if (mean.size() != sd.size()) throw Error("standardize: mean/std size mismatch");
      Layer pre;
      pre.weights.assign(mean.size(), std::vector<double>(mean.size(), 0.0));
      pre.bias.resize(mean.size());
      for (std::size_t i = 0; i < mean.size(); ++i) {
        if (!(sd[i] > 0.0)) throw Error("standardize: std must be positive");
        pre.weights[i][i] = 1.0 / sd[i];
        pre.bias[i] = -mean[i] / sd[i];
      }
      layers.insert(layers.begin(), std::move(pre));
    }
    std::optional<MonotonePostprocess> post;
    if (j.contains("postprocess")) {
      const auto& p = j.at("postprocess");
      std::size_t n = layers.back().out_dim();
      auto pp = MonotonePostprocess::identity(n);
      if (p.contains("scale")) pp.scale = p.at("scale").get<std::vector<double>>();
      if (p.contains("offset")) pp.offset = p.at("offset").get<std::vector<double>>();
      if (p.contains("clip_lo")) pp.clip_lo = p.at("clip_lo").get<std::vector<double>>();
      if (p.contains("clip_hi")) pp.clip_hi = p.at("clip_hi").get<std::vector<double>>();
      post = std::move(pp);
    }
    return std::make_shared<FeedForwardNetwork>(std::move(layers), std::move(post));
  }
  if (kind == "polynomial") {
    if (j.value("basis", "graded-lex") != "graded-lex") throw Error("polynomial: only the graded-lex basis is supported");
    return std::make_shared<PolynomialModel>(j.at("degree").get<int>(), j.at("norm_min").get<std::vector<double>>(),
                                             j.at("norm_max").get<std::vector<double>>(),
                                             j.at("coefficients").get<std::vector<std::vector<double>>>(),
                                             j.value("tight_even_powers", true));
  }
  throw Error("unknown model kind '" + kind + "'");
}

/// Binds by the optional "inputs"/"outputs" variable-name lists, else by role order.
inline BoundModel model_from_json(const json& j, const Space& space) {
  auto sys = system_from_json(j);
  auto names = [&](const char* key, std::vector<VarIndex> dflt) {
    if (!j.contains(key)) return dflt;
    std::vector<VarIndex> out;
    for (const auto& n : j.at(key)) out.push_back(space.require(n.get<std::string>()));
    return out;
  };
  return BoundModel(sys, names("inputs", space.inputs()), names("outputs", space.outputs()));
}

inline BoundModel load_model(const std::string& path, const Space& space) {
  return model_from_json(read_json_file(path), space);
}

inline json model_to_json(const PolynomialModel& m, const std::vector<std::string>& inputs = {},
                          const std::vector<std::string>& outputs = {}) {
  json j = {{"v", kFormatVersion},         {"kind", "polynomial"},          {"degree", m.degree()},
            {"basis", "graded-lex"},       {"norm_min", m.norm_min()},      {"norm_max", m.norm_max()},
            {"coefficients", m.coefficients()}, {"tight_even_powers", m.tight_even_powers()}};
  if (!inputs.empty()) j["inputs"] = inputs;
  if (!outputs.empty()) j["outputs"] = outputs;
  return j;
}

inline json model_to_json(const FeedForwardNetwork& n, const std::vector<std::string>& inputs = {},
                          const std::vector<std::string>& outputs = {}) {
  json layers = json::array();
  for (const auto& l : n.layers())
    layers.push_back({{"weights", l.weights}, {"bias", l.bias}, {"activation", activation_name(l.activation)}});
  json j = {{"v", kFormatVersion}, {"kind", "network"}, {"layers", layers}};
  if (const auto& p = n.postprocess())
    j["postprocess"] = {{"scale", p->scale}, {"offset", p->offset}, {"clip_lo", p->clip_lo}, {"clip_hi", p->clip_hi}};
  if (!inputs.empty()) j["inputs"] = inputs;
  if (!outputs.empty()) j["outputs"] = outputs;
  return j;
}

// ---------------------------------------------------------------------------
// Descriptions and reach sets

inline json box_to_json(const Box& b, const Space& space) {
  json o = json::object();
  for (std::size_t k = 0; k < b.dim(); ++k) o[space.var(b.var(k)).name] = {b.axis(k).lo, b.axis(k).hi};
  return o;
}

inline Box box_from_json(const json& j, const Space& space) {
  std::vector<VarIndex> vars;
  std::vector<Interval> iv;
  for (const auto& [name, b] : j.items()) {
    vars.push_back(space.require(name));
    iv.push_back(Interval::checked(b.at(0).get<double>(), b.at(1).get<double>()));
  }
  return Box(std::move(vars), std::move(iv));
}

inline json literal_to_json(const Literal& l, const DomainPack& pack) {
  if (const auto* p = std::get_if<PredicateRef>(&l)) return pack.predicate(p->index).name;
  return {{"box", box_to_json(std::get<BoxRange>(l).box, pack.space())}};
}

inline Literal literal_from_json(const json& j, const DomainPack& pack) {
  if (j.is_string()) return PredicateRef{pack.require(j.get<std::string>())};
  return BoxRange{box_from_json(j.at("box"), pack.space())};
}

/// Conditions as lists of literals (one element = atomic), with weights.
inline json description_to_json(const Description& d, const DomainPack& pack) {
  json items = json::array();
  for (const auto& it : d.items) {
    json lits = json::array();
    for (const auto& m : it.condition.members()) lits.push_back(literal_to_json(m, pack));
    items.push_back({{"condition", lits},
                     {"text", render_condition(it.condition, pack)},
                     {"uv", it.unique_volume},
                     {"tv", it.total_volume}});
  }
  return {{"v", kFormatVersion}, {"conditions", items}};
}

inline Description description_from_json(const json& j, const DomainPack& pack) {
  check_version(j, "description");
  Description d;
  for (const auto& it : j.at("conditions")) {
    std::vector<Literal> lits;
    for (const auto& l : it.at("condition")) lits.push_back(literal_from_json(l, pack));
    d.items.push_back({Condition(std::move(lits)), it.at("uv").get<double>(), it.at("tv").get<double>(), {}});
  }
  return d;
}

inline json reach_to_json(const ReachSet& rs, const DomainPack& pack) {
  json pairs = json::array();
  for (const auto& p : rs.pairs)
    pairs.push_back({{"input", box_to_json(p.input, pack.space())}, {"output", box_to_json(p.output, pack.space())}});
  json vars = json::array();
  for (const auto& v : pack.space().variables())
    vars.push_back({{"name", v.name}, {"role", v.role == Role::Input ? "input" : "output"}, {"bounds", {v.bounds.lo, v.bounds.hi}}});
  return {{"v", kFormatVersion},
          {"epsilon", rs.epsilon},
          {"mode", rs.mode == Strength::Strict ? "strict" : "usually"},
          {"merged", rs.merged},
          {"variables", vars},
          {"pairs", pairs}};
}

/// Input boxes of a reach-set dump plus the space they live in.
struct ReachDump {
  Space space;
  std::vector<Box> inputs;
};

inline ReachDump reach_dump_from_json(const json& j) {
  check_version(j, "reach dump");
  std::vector<Variable> vars;
  for (const auto& v : j.at("variables"))
    vars.push_back({v.at("name").get<std::string>(), v.at("role").get<std::string>() == "input" ? Role::Input : Role::Output,
                    Interval::checked(v.at("bounds").at(0).get<double>(), v.at("bounds").at(1).get<double>())});
  ReachDump d{Space(std::move(vars)), {}};
  for (const auto& p : j.at("pairs")) d.inputs.push_back(box_from_json(p.at("input"), d.space));
  return d;
}

// ---------------------------------------------------------------------------
// CSV

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw Error("csv: no column named '" + name + "'");
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') quoted = !quoted;
    else if (c == ',' && !quoted) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') cur += c;
  }
  out.push_back(cur);
  for (auto& s : out) {
    auto a = s.find_first_not_of(" \t"), b = s.find_last_not_of(" \t");
    s = a == std::string::npos ? "" : s.substr(a, b - a + 1);
  }
  return out;
}

/// Header row then decimal floats; blank lines are skipped.
inline CsvTable read_csv(std::istream& in, const std::string& what = "csv") {
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split_csv_line(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size())
      throw Error(what + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) + " fields");
    std::vector<double> row(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      char* end = nullptr;
      row[i] = std::strtod(cells[i].c_str(), &end);
      if (cells[i].empty() || *end != '\0')
        throw Error(what + ":" + std::to_string(lineno) + ": not a number: '" + cells[i] + "'");
    }
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw Error(what + ": empty file");
  return t;
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return read_csv(in, path);
}

inline Dataset select_columns(const CsvTable& t, const std::vector<std::string>& inputs,
                              const std::vector<std::string>& outputs) {
  Dataset d;
  d.input_names = inputs;
  d.output_names = outputs;
  std::vector<std::size_t> ic, oc;
  for (const auto& n : inputs) ic.push_back(t.column(n));
  for (const auto& n : outputs) oc.push_back(t.column(n));
  for (const auto& r : t.rows) {
    std::vector<double> x, y;
    for (auto c : ic) x.push_back(r[c]);
    for (auto c : oc) y.push_back(r[c]);
    d.x.push_back(std::move(x));
    d.y.push_back(std::move(y));
  }
  return d;
}

}  // namespace illum
