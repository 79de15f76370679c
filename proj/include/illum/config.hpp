#pragma once

// Runtime configuration from a TOML or JSON file. Keys mirror the option
// structs; anything absent keeps its default. Unknown sections and keys are
// rejected so typos do not pass silently.

#include <string>

#include <nlohmann/json.hpp>

#define TOML_EXCEPTIONS 1
#include <tomlplusplus/toml.hpp>

#include "illum/description.hpp"
#include "illum/io.hpp"
#include "illum/reachability.hpp"
#include "illum/session.hpp"
#include "illum/smt.hpp"

namespace illum {

struct AppConfig {
  ReachOptions reach;
  DescriptionOptions description;
  StateParams initial;
  std::optional<SmtConfig> smt;
  std::size_t split_budget = 32;
  std::uint64_t seed = 0;
  int port = 8080;
  std::string data_dir;
  std::string history_log;

  SessionConfig session_config() const {
    SessionConfig c;
    c.reach = reach;
    c.description = description;
    c.initial = initial;
    c.seed = seed;
    return c;
  }
  Decider decider() const { return Decider(smt, split_budget); }
};

namespace config_detail {

inline json toml_to_json(const toml::node& n) {
  if (auto t = n.as_table()) {
    json o = json::object();
    for (const auto& [k, v] : *t) o[std::string(k.str())] = toml_to_json(v);
    return o;
  }
  if (auto a = n.as_array()) {
    json arr = json::array();
    for (const auto& v : *a) arr.push_back(toml_to_json(v));
    return arr;
  }
  if (auto v = n.as_string()) return v->get();
  if (auto v = n.as_integer()) return v->get();
  if (auto v = n.as_floating_point()) return v->get();
  if (auto v = n.as_boolean()) return v->get();
  throw Error("config: unsupported TOML value (dates and times are not accepted)");
}

template <class T>
void take(const json& sec, const char* key, T& out, std::set<std::string>& seen) {
  if (!sec.contains(key)) return;
  seen.insert(key);
  out = sec.at(key).get<T>();
}

inline void reject_unknown(const json& sec, const std::set<std::string>& seen, const std::string& where) {
  for (const auto& [k, _] : sec.items())
    if (seen.count(k) == 0) throw Error("config: unknown key '" + where + k + "'");
}

}  // namespace config_detail

inline void apply_config(AppConfig& c, const json& j) {
  using config_detail::reject_unknown;
  using config_detail::take;
  std::set<std::string> top;
  take(j, "seed", c.seed, top);
  if (j.contains("reach")) {
    top.insert("reach");
    const auto& s = j.at("reach");
    std::set<std::string> seen;
    take(s, "max_boxes", c.reach.analysis.max_boxes, seen);
    take(s, "max_depth", c.reach.analysis.max_depth, seen);
    take(s, "n_sample", c.reach.analysis.n_sample, seen);
    take(s, "feasibility_samples", c.reach.analysis.feasibility_samples, seen);
    take(s, "p_bisect", c.reach.analysis.p_bisect, seen);
    take(s, "force_k2", c.reach.analysis.force_k2, seen);
    take(s, "smt_in_reach", c.reach.analysis.smt_in_reach, seen);
    take(s, "breadth_first", c.reach.analysis.breadth_first, seen);
    take(s, "orthant_dim_cap", c.reach.orthant_dim_cap, seen);
    take(s, "merge_theta", c.reach.merge_params.theta, seen);
    reject_unknown(s, seen, "reach.");
  }
  if (j.contains("description")) {
    top.insert("description");
    const auto& s = j.at("description");
    std::set<std::string> seen;
    take(s, "n_shell", c.description.n_shell, seen);
    take(s, "n_prior_formal", c.description.n_prior_formal, seen);
    reject_unknown(s, seen, "description.");
  }
  if (j.contains("session")) {
    top.insert("session");
    const auto& s = j.at("session");
    std::set<std::string> seen;
    take(s, "epsilon", c.initial.epsilon, seen);
    take(s, "alpha", c.initial.alpha, seen);
    take(s, "n_sample", c.initial.n_sample, seen);
    take(s, "history_log", c.history_log, seen);
    reject_unknown(s, seen, "session.");
    if (!(c.initial.epsilon >= kEpsilonMin && c.initial.epsilon <= kEpsilonMax))
      throw Error("config: session.epsilon must lie in [0.001, 1]");
  }
  if (j.contains("smt")) {
    top.insert("smt");
    const auto& s = j.at("smt");
    std::set<std::string> seen;
    SmtConfig sc = c.smt.value_or(SmtConfig{});
    take(s, "command", sc.command, seen);
    take(s, "timeout_ms", sc.timeout_ms, seen);
    take(s, "split_budget", c.split_budget, seen);
    reject_unknown(s, seen, "smt.");
    if (sc.command.empty()) c.smt.reset();
    else c.smt = sc;
  }
  if (j.contains("service")) {
    top.insert("service");
    const auto& s = j.at("service");
    std::set<std::string> seen;
    take(s, "port", c.port, seen);
    take(s, "data_dir", c.data_dir, seen);
    reject_unknown(s, seen, "service.");
  }
  reject_unknown(j, top, "");
}

inline json parse_config_text(const std::string& text, bool toml_syntax, const std::string& what = "config") {
  if (!toml_syntax) {
    try {
      return json::parse(text);
    } catch (const json::parse_error& e) {
      throw Error(what + ": " + e.what());
    }
  }
  try {
    return config_detail::toml_to_json(toml::parse(text, what));
  } catch (const toml::parse_error& e) {
    throw Error(what + ": " + std::string(e.description()));
  }
}

/// JSON when the file ends in .json, TOML otherwise.
inline void load_config(AppConfig& c, const std::string& path) {
  bool is_json = path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
  apply_config(c, parse_config_text(read_file(path), !is_json, path));
}

}  // namespace illum
