#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "illum/metrics.hpp"
#include "illum/session.hpp"

namespace illum {

inline std::size_t draw_index(Rng& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

/// A random, restriction-respecting question: uniform type and strength, one
/// to four distinct disjuncts of one to four distinct predicates each.
inline Question random_question(const DomainPack& pack, Rng& rng, const QuestionLimits& limits = {}) {
  static constexpr QuestionType kTypes[] = {QuestionType::WhenDoYou, QuestionType::WhatDoYouDoWhen,
                                            QuestionType::Circumstances};
  Question q;
  q.type = kTypes[draw_index(rng, 3)];
  q.strength = draw_index(rng, 2) == 0 ? Strength::Strict : Strength::Usually;
  std::vector<std::string> allowed;
  for (std::size_t i = 0; i < pack.predicates().size(); ++i)
    if (predicate_allowed(pack.predicate(i), q.type)) allowed.push_back(pack.predicate(i).name);
  if (allowed.empty()) throw Error("pack has no predicate usable in this question type");

  std::size_t n_disj = 1 + draw_index(rng, limits.max_disjuncts);
  std::set<std::vector<std::string>> seen;
  for (std::size_t tries = 0; q.content.size() < n_disj && tries < 64; ++tries) {
    std::size_t n_conj = 1 + draw_index(rng, std::min(limits.max_conjuncts, allowed.size()));
    std::vector<std::string> pool = allowed;
    std::vector<std::string> conj;
    for (std::size_t j = 0; j < n_conj; ++j) {
      std::size_t k = draw_index(rng, pool.size());
      conj.push_back(pool[k]);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(k));
    }
    std::vector<std::string> key = conj;
    std::sort(key.begin(), key.end());
    if (seen.insert(key).second) q.content.push_back(std::move(conj));
  }
  return q;
}

enum class Script { A, B };

inline const char* script_name(Script s) { return s == Script::A ? "A" : "B"; }

// A: coarse start then LA, MA. B: fine start then MA, LA.
inline std::vector<ResponseKind> script_steps(Script s) {
  if (s == Script::A) return {ResponseKind::LessAbstract, ResponseKind::MoreAbstract, ResponseKind::Exit};
  return {ResponseKind::MoreAbstract, ResponseKind::LessAbstract, ResponseKind::Exit};
}

inline double script_epsilon(Script s, Rng& rng) {
  bool first = draw_index(rng, 2) == 0;
  if (s == Script::A) return first ? 0.25 : 0.20;
  return first ? 0.125 : 0.10;
}

struct Transition {
  ResponseKind request = ResponseKind::MoreAbstract;
  MetricsRow delta;
};

struct SessionRun {
  Script script = Script::A;
  Question question;
  double epsilon0 = 0.0;
  std::size_t redraws = 0;
  bool cap_hit = false;
  std::vector<SessionState> path;
  std::vector<MetricsRow> rows;  // one per described state
  std::vector<Transition> transitions;
};

inline MetricsRow state_metrics(const SessionState& s, const DomainPack& pack) {
  MetricsRow row;
  reach_metrics(s.reach, pack.space().input_bounding(), row);
  description_metrics(s.description, pack, row);
  return row;
}

/// Plays one scripted user against a fresh session. Questions whose first
/// analysis retains nothing are redrawn (up to max_redraws) since a script
/// cannot steer an empty answer.
inline SessionRun synthetic_session(std::shared_ptr<const DomainPack> pack, std::shared_ptr<const BoundModel> model,
                                    Script script, std::uint64_t seed, const SessionConfig& base,
                                    std::size_t max_redraws = 32, const Decider& decider = Decider{}) {
  SessionRun run;
  run.script = script;
  Rng rng(mix_seed(seed, 0x5e55));
  SessionConfig cfg = base;
  cfg.seed = seed;
  cfg.initial.epsilon = script_epsilon(script, rng);
  run.epsilon0 = cfg.initial.epsilon;
  Session session(pack, model, cfg, decider);
  for (;;) {
    run.question = random_question(*pack, rng, cfg.limits);
    const auto& s0 = session.ask(run.question);
    if (!s0.reach.pairs.empty() || run.redraws >= max_redraws) break;
    ++run.redraws;
  }
  for (auto step : script_steps(script)) {
    Response r = step == ResponseKind::MoreAbstract   ? Response::more()
                 : step == ResponseKind::LessAbstract ? Response::less()
                                                      : Response::exit();
    session.respond(r);
  }
  run.path = session.path();
  for (const auto& s : run.path) {
    if (s.terminal) continue;
    run.cap_hit = run.cap_hit || s.reach.stats.cap_hit;
    run.rows.push_back(state_metrics(s, *pack));
  }
  for (std::size_t t = 0; t + 1 < run.rows.size(); ++t) {
    const auto& next = run.path[t + 1];
    run.transitions.push_back({next.created_by->kind,
                               relative_change(run.rows[t], run.rows[t + 1],
                                               similarity(run.path[t + 1].description, run.path[t].description))});
  }
  return run;
}

struct ExperimentConfig {
  std::size_t runs = 60;  // per pack; alternates scripts A and B
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::size_t max_redraws = 32;
  SessionConfig session;
};

struct PackRuns {
  std::string pack;
  std::vector<SessionRun> runs;
};

/// Runs `cfg.runs` sessions; session i uses script A for even i and B for odd
/// i, and a seed derived from (cfg.seed, i) only, so results do not depend on
/// the number of worker threads.
inline PackRuns run_experiment(std::shared_ptr<const DomainPack> pack, std::shared_ptr<const BoundModel> model,
                               const ExperimentConfig& cfg, const Decider& decider = Decider{}) {
  PackRuns out;
  out.pack = pack->name();
  out.runs.resize(cfg.runs);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex fail_mu;
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= cfg.runs) return;
      try {
        SessionConfig sc = cfg.session;
        sc.name = out.pack + "#" + std::to_string(i);
        out.runs[i] = synthetic_session(pack, model, i % 2 == 0 ? Script::A : Script::B, mix_seed(cfg.seed, i), sc,
                                        cfg.max_redraws, decider);
      } catch (...) {
        std::lock_guard<std::mutex> lock(fail_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::size_t jobs = std::max<std::size_t>(1, std::min(cfg.jobs, cfg.runs));
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

struct AggregateColumn {
  std::string pack;
  ResponseKind request = ResponseKind::MoreAbstract;
  std::size_t n = 0;
  std::array<double, kMetricCount> medians{};
};

inline std::vector<AggregateColumn> aggregate(const std::vector<PackRuns>& all) {
  std::vector<AggregateColumn> out;
  for (const auto& pr : all) {
    for (auto req : {ResponseKind::MoreAbstract, ResponseKind::LessAbstract}) {
      AggregateColumn col;
      col.pack = pr.pack;
      col.request = req;
      std::array<std::vector<double>, kMetricCount> vals;
      for (const auto& run : pr.runs)
        for (const auto& t : run.transitions) {
          if (t.request != req) continue;
          auto v = t.delta.values();
          for (std::size_t k = 0; k < kMetricCount; ++k) vals[k].push_back(v[k]);
          ++col.n;
        }
      for (std::size_t k = 0; k < kMetricCount; ++k) col.medians[k] = median(vals[k]);
      out.push_back(std::move(col));
    }
  }
  return out;
}

inline std::string format_metric(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v == 0.0 ? 0.0 : v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

/// Long-format CSV: one line per (pack, request, metric) median.
inline void write_report_csv(std::ostream& os, const std::vector<AggregateColumn>& cols) {
  os << "pack,request,n,metric,median\n";
  for (const auto& c : cols)
    for (std::size_t k = 0; k < kMetricCount; ++k)
      os << csv_field(c.pack) << ',' << response_name(c.request) << ',' << c.n << ',' << csv_field(metric_name(k))
         << ',' << format_metric(c.medians[k]) << '\n';
}

/// One line per transition with the full delta row.
inline void write_transitions_csv(std::ostream& os, const std::vector<PackRuns>& all) {
  os << "pack,run,script,epsilon0,question_type,strength,redraws,cap_hit,request";
  for (std::size_t k = 0; k < kMetricCount; ++k) os << ',' << csv_field(metric_name(k));
  os << '\n';
  for (const auto& pr : all)
    for (std::size_t i = 0; i < pr.runs.size(); ++i) {
      const auto& r = pr.runs[i];
      for (const auto& t : r.transitions) {
        os << csv_field(pr.pack) << ',' << i << ',' << script_name(r.script) << ',' << format_metric(r.epsilon0)
           << ',' << static_cast<int>(r.question.type) << ','
           << (r.question.strength == Strength::Strict ? "strict" : "usually") << ',' << r.redraws << ','
           << (r.cap_hit ? 1 : 0) << ',' << response_name(t.request);
        for (double v : t.delta.values()) os << ',' << format_metric(v);
        os << '\n';
      }
    }
}

/// Text table: metrics down, one (pack, request) column each.
inline void write_report_table(std::ostream& os, const std::vector<AggregateColumn>& cols) {
  std::size_t w0 = 24;
  std::vector<std::string> heads;
  std::size_t w = 10;
  for (const auto& c : cols) {
    heads.push_back(c.pack + " " + (c.request == ResponseKind::MoreAbstract ? "MA" : "LA"));
    w = std::max(w, heads.back().size() + 2);
    for (double m : c.medians) w = std::max(w, format_metric(m).size() + 2);
  }
  auto pad = [](std::string s, std::size_t n) {
    if (s.size() < n) s.insert(0, n - s.size(), ' ');
    return s;
  };
  std::string line = pad("", w0);
  for (const auto& h : heads) line += pad(h, w);
  os << line << '\n';
  line = pad("n", w0);
  for (const auto& c : cols) line += pad(std::to_string(c.n), w);
  os << line << '\n';
  for (std::size_t k = 0; k < kMetricCount; ++k) {
    std::string name = metric_name(k);
    line = name + std::string(name.size() < w0 ? w0 - name.size() : 1, ' ');
    for (const auto& c : cols) line += pad(format_metric(c.medians[k]), w);
    os << line << '\n';
  }
}

}  // namespace illum
