#pragma once

// Interaction sessions: the per-question path of states, the operators that
// move along it, the append-only interaction log, and the bandit-based
// predicate selector.

#include <fcntl.h>
#include <unistd.h>

#include <cmath>
#include <fstream>
#include <mutex>

#include <nlohmann/json.hpp>

#include "illum/description.hpp"

namespace illum {

// ---------------------------------------------------------------------------
// Interaction records and APS

/// What the user did after seeing a state.
enum class Reply { None, MoreAbstract, LessAbstract, Break, Other };

inline const char* reply_name(Reply r) {
  switch (r) {
    case Reply::None: return "none";
    case Reply::MoreAbstract: return "ma";
    case Reply::LessAbstract: return "la";
    case Reply::Break: return "b";
    case Reply::Other: return "other";
  }
  return "?";
}

inline Reply parse_reply(const std::string& s) {
  if (s == "none") return Reply::None;
  if (s == "ma") return Reply::MoreAbstract;
  if (s == "la") return Reply::LessAbstract;
  if (s == "b") return Reply::Break;
  if (s == "other") return Reply::Other;
  throw Error("unknown reply '" + s + "'");
}

struct InteractionRecord {
  std::string question;   // question instance id; a repeated question gets a new id
  std::size_t step = 0;   // position of the state within that question's path
  std::map<std::string, std::size_t> omega;  // named predicate -> occurrences in the description
  Reply reply = Reply::None;
  std::string snapshot;

  friend bool operator==(const InteractionRecord&, const InteractionRecord&) = default;
};

inline nlohmann::json to_json(const InteractionRecord& r) {
  return {{"v", 1}, {"question", r.question}, {"step", r.step}, {"omega", r.omega}, {"reply", reply_name(r.reply)},
          {"snapshot", r.snapshot}};
}

inline InteractionRecord record_from_json(const nlohmann::json& j) {
  if (j.at("v").get<int>() != 1) throw Error("unsupported record version");
  InteractionRecord r;
  r.question = j.at("question").get<std::string>();
  r.step = j.at("step").get<std::size_t>();
  r.omega = j.at("omega").get<std::map<std::string, std::size_t>>();
  r.reply = parse_reply(j.at("reply").get<std::string>());
  r.snapshot = j.value("snapshot", "");
  return r;
}

/// Named-predicate occurrence counts; a predicate inside several conjunctions counts once per conjunction.
inline std::map<std::string, std::size_t> omega_counts(const Description& d, const DomainPack& pack) {
  std::map<std::string, std::size_t> out;
  for (const auto& it : d.items)
    for (const auto& m : it.condition.members())
      if (const auto* p = std::get_if<PredicateRef>(&m)) ++out[pack.predicate(p->index).name];
  return out;
}

struct ApsCounts {
  std::size_t occ = 0, succ = 0;
};

/// occ/succ for each candidate. `direction` is the request being made now
/// (MoreAbstract or LessAbstract). The successor of a record is the record
/// with the next step of the same question; without one, the record never
/// counts.
inline std::map<std::string, ApsCounts> aps_counts(const std::vector<InteractionRecord>& history,
                                                   const std::vector<std::string>& candidates, Reply direction) {
  Reply opposite = direction == Reply::MoreAbstract ? Reply::LessAbstract : Reply::MoreAbstract;
  std::map<std::pair<std::string, std::size_t>, const InteractionRecord*> by_step;
  for (const auto& r : history) by_step[{r.question, r.step}] = &r;
  std::map<std::string, ApsCounts> out;
  for (const auto& c : candidates) out[c];
  for (const auto& r : history) {
    if (r.reply != direction) continue;
    auto it = by_step.find({r.question, r.step + 1});
    if (it == by_step.end()) continue;
    const InteractionRecord& next = *it->second;
    for (const auto& c : candidates) {
      auto before = r.omega.count(c) ? r.omega.at(c) : 0;
      auto after = next.omega.count(c) ? next.omega.at(c) : 0;
      if (before <= after) continue;
      ++out[c].occ;
      if (next.reply == opposite || next.reply == Reply::Break) ++out[c].succ;
    }
  }
  return out;
}

inline double ucb1_score(const ApsCounts& c, std::size_t total) {
  double n = static_cast<double>(c.occ);
  return static_cast<double>(c.succ) / n + std::sqrt(2.0 * std::log(static_cast<double>(total)) / n);
}

/// Candidate to drop: the first never-tried one in the given order, else the
/// first UCB1 maximizer.
inline std::string aps_select(const std::vector<InteractionRecord>& history, const std::vector<std::string>& candidates,
                              Reply direction) {
  if (candidates.empty()) throw Error("automatic predicate selection needs a named predicate in the description");
  auto counts = aps_counts(history, candidates, direction);
  for (const auto& c : candidates)
    if (counts[c].occ == 0) return c;
  std::size_t total = 0;
  for (const auto& c : candidates) total += counts[c].occ;
  std::string best = candidates.front();
  double best_s = -INFINITY;
  for (const auto& c : candidates) {
    double s = ucb1_score(counts[c], total);
    if (s > best_s) {
      best_s = s;
      best = c;
    }
  }
  return best;
}

/// Append-only NDJSON log. Each record is written with a single write() on an
/// O_APPEND descriptor, so concurrent writers never interleave inside a line.
class HistoryStore {
 public:
  HistoryStore() = default;
  explicit HistoryStore(std::string path) : path_(std::move(path)) {}

  const std::string& path() const { return path_; }

  void append(const InteractionRecord& r) {
    std::lock_guard<std::mutex> lock(mu_);
    records_.push_back(r);
    if (path_.empty()) return;
    std::string line = to_json(r).dump() + "\n";
    int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (fd < 0) throw Error("cannot open history log '" + path_ + "'");
    ssize_t n = ::write(fd, line.data(), line.size());
    ::close(fd);
    if (n != static_cast<ssize_t>(line.size())) throw Error("short write to history log '" + path_ + "'");
  }

  /// Reads every record from the log, skipping (and counting) corrupt lines.
  std::size_t load() {
    std::lock_guard<std::mutex> lock(mu_);
    records_.clear();
    std::size_t skipped = 0;
    if (path_.empty()) return 0;
    std::ifstream in(path_);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      try {
        records_.push_back(record_from_json(nlohmann::json::parse(line)));
      } catch (const std::exception& e) {
        ++skipped;
        std::fprintf(stderr, "warning: %s:%zu: skipping corrupt history record (%s)\n", path_.c_str(), lineno, e.what());
      }
    }
    return skipped;
  }

  std::vector<InteractionRecord> records() const {
    std::lock_guard<std::mutex> lock(mu_);
    return records_;
  }

 private:
  std::string path_;
  mutable std::mutex mu_;
  std::vector<InteractionRecord> records_;
};

// ---------------------------------------------------------------------------
// Session states and operators

struct StateParams {
  double epsilon = 0.25;
  double alpha = 0.1;
  std::size_t n_sample = 20;
  bool merge_enabled = false;
  bool produce_greater_abstraction = false;
  std::set<std::size_t> ignored;
};

constexpr double kEpsilonMin = 1e-3;
constexpr double kEpsilonMax = 1.0;

enum class ResponseKind { MoreAbstract, LessAbstract, History, Ignore, Aps, Exit };

struct Response {
  ResponseKind kind = ResponseKind::Exit;
  std::size_t target = 0;      // History
  std::string predicate;       // Ignore
  bool more_abstract = true;   // Aps: direction of the request

  static Response more() { return {ResponseKind::MoreAbstract, 0, {}, true}; }
  static Response less() { return {ResponseKind::LessAbstract, 0, {}, false}; }
  static Response history(std::size_t t) { return {ResponseKind::History, t, {}, true}; }
  static Response ignore(std::string p) { return {ResponseKind::Ignore, 0, std::move(p), true}; }
  static Response aps(bool more) { return {ResponseKind::Aps, 0, {}, more}; }
  static Response exit() { return {ResponseKind::Exit, 0, {}, true}; }
};

inline const char* response_name(ResponseKind k) {
  switch (k) {
    case ResponseKind::MoreAbstract: return "ma";
    case ResponseKind::LessAbstract: return "la";
    case ResponseKind::History: return "history";
    case ResponseKind::Ignore: return "ignore";
    case ResponseKind::Aps: return "aps";
    case ResponseKind::Exit: return "exit";
  }
  return "?";
}

/// How a response is logged for the selector: the direction for MA/LA and
/// directed APS requests, Break for exit, Other for the rest.
inline Reply reply_of(const Response& r) {
  switch (r.kind) {
    case ResponseKind::MoreAbstract: return Reply::MoreAbstract;
    case ResponseKind::LessAbstract: return Reply::LessAbstract;
    case ResponseKind::Aps: return r.more_abstract ? Reply::MoreAbstract : Reply::LessAbstract;
    case ResponseKind::Exit: return Reply::Break;
    default: return Reply::Other;
  }
}

struct SessionState {
  std::size_t id = 0;
  std::optional<std::size_t> parent;
  std::optional<Response> created_by;
  Question question;
  StateParams params;
  std::uint64_t seed = 0;
  ReachSet reach;
  Description description;
  std::string message;  // set when no situation matches the question
  bool terminal = false;
  std::string dropped;  // predicate removed by Ignore/Aps
};

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Content hash of what the user sees: question, parameters, and description.
inline std::string snapshot_hash(const SessionState& s, const DomainPack& pack) {
  std::string canon;
  for (const auto& conj : s.question.content) {
    for (const auto& p : conj) canon += p + ",";
    canon += "|";
  }
  canon += std::to_string(static_cast<int>(s.question.type)) + std::to_string(static_cast<int>(s.question.strength));
  canon += hexfloat(s.params.epsilon) + hexfloat(s.params.alpha) + std::to_string(s.params.n_sample);
  canon += s.params.merge_enabled ? "M" : "m";
  canon += s.params.produce_greater_abstraction ? "G" : "g";
  for (auto i : s.params.ignored) canon += "i" + std::to_string(i);
  canon += "\n" + render_description(s.description, pack) + s.message;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canon)));
  return buf;
}

struct SessionConfig {
  ReachOptions reach;              // epsilon here is ignored; states carry their own
  DescriptionOptions description;  // n_sample/alpha/flags are overridden by state params
  StateParams initial;
  std::uint64_t seed = 0;
  std::string name;  // prefix for question instance ids in the shared log
  QuestionLimits limits;
};

class Session {
 public:
  Session(std::shared_ptr<const DomainPack> pack, std::shared_ptr<const BoundModel> model, SessionConfig cfg,
          Decider decider = Decider{}, std::shared_ptr<HistoryStore> store = nullptr)
      : pack_(std::move(pack)), model_(std::move(model)), cfg_(std::move(cfg)), decider_(std::move(decider)),
        store_(std::move(store)) {
    if (!store_) store_ = std::make_shared<HistoryStore>();
  }

  const DomainPack& pack() const { return *pack_; }
  const BoundModel& model() const { return *model_; }
  const SessionConfig& config() const { return cfg_; }
  HistoryStore& store() { return *store_; }

  const std::vector<SessionState>& path() const { return path_; }
  bool active() const { return !path_.empty() && !path_.back().terminal; }
  const SessionState& current() const {
    if (path_.empty()) throw Error("no question has been asked");
    return path_.back();
  }
  const std::string& question_id() const { return question_id_; }
  std::size_t questions_asked() const { return questions_; }

  /// Starts a new question; throws on validation errors.
  const SessionState& ask(const Question& q) {
    auto v = validate_question(q, *pack_, cfg_.limits);
    if (!v.empty()) {
      std::string msg = "invalid question:";
      for (const auto& s : v) msg += "\n  " + s;
      throw ValidationError(msg, v);
    }
    path_.clear();
    ++questions_;
    question_id_ = (cfg_.name.empty() ? std::to_string(cfg_.seed) : cfg_.name) + ":" + std::to_string(questions_);
    SessionState s;
    s.question = q;
    s.params = cfg_.initial;
    compute(s, true);
    push(std::move(s));
    return path_.back();
  }

  const SessionState& respond(const Response& r) {
    if (!active()) throw Error("no active question to respond to");
    const SessionState& cur = path_.back();
    Reply reply = reply_of(r);
    SessionState next;
    next.question = cur.question;
    next.params = cur.params;
    next.parent = cur.id;
    next.created_by = r;
    switch (r.kind) {
      case ResponseKind::MoreAbstract:
      case ResponseKind::LessAbstract: {
        adjust(next.params, r.kind == ResponseKind::MoreAbstract);
        log(cur, reply);
        compute(next, true);
        break;
      }
      case ResponseKind::History: {
        if (r.target >= path_.size()) throw Error("invalid history index " + std::to_string(r.target));
        const SessionState& t = path_[r.target];
        if (t.terminal) throw Error("history index " + std::to_string(r.target) + " is an exit marker");
        log(cur, reply);
        next = t;
        next.parent = cur.id;
        next.created_by = r;
        break;
      }
      case ResponseKind::Ignore: {
        auto idx = pack_->find(r.predicate);
        if (!idx || !named_in(cur.description, *idx))
          throw Error("predicate '" + r.predicate + "' does not occur in the current description");
        log(cur, reply);
        next.params.ignored.insert(*idx);
        next.dropped = r.predicate;
        next.reach = cur.reach;
        compute(next, false);
        break;
      }
      case ResponseKind::Aps: {
        auto cands = candidates(cur.description);
        log(cur, reply);
        std::string pick = aps_select(store_->records(), cands, reply);
        next.params.ignored.insert(pack_->require(pick));
        next.dropped = pick;
        next.reach = cur.reach;
        compute(next, false);
        break;
      }
      case ResponseKind::Exit: {
        log(cur, reply);
        next = SessionState{};
        next.question = cur.question;
        next.params = cur.params;
        next.parent = cur.id;
        next.created_by = r;
        next.terminal = true;
        next.reach = {};
        break;
      }
    }
    push(std::move(next));
    return path_.back();
  }

  /// Named predicates of a description in declaration order.
  std::vector<std::string> candidates(const Description& d) const {
    std::set<std::size_t> idx;
    for (const auto& it : d.items)
      for (const auto& m : it.condition.members())
        if (const auto* p = std::get_if<PredicateRef>(&m)) idx.insert(p->index);
    std::vector<std::string> out;
    for (auto i : idx) out.push_back(pack_->predicate(i).name);
    return out;
  }

  std::string hash(const SessionState& s) const { return snapshot_hash(s, *pack_); }

  class ValidationError : public Error {
   public:
    ValidationError(const std::string& msg, std::vector<std::string> v) : Error(msg), violations(std::move(v)) {}
    std::vector<std::string> violations;
  };

 private:
  static void adjust(StateParams& p, bool more) {
    if (more) {
      p.epsilon = std::min(kEpsilonMax, p.epsilon * 2.0);
      p.merge_enabled = true;
      p.produce_greater_abstraction = true;
    } else {
      p.epsilon = std::max(kEpsilonMin, p.epsilon / 2.0);
      p.merge_enabled = false;
      p.produce_greater_abstraction = false;
    }
  }

  static bool named_in(const Description& d, std::size_t idx) {
    for (const auto& it : d.items)
      for (const auto& m : it.condition.members())
        if (const auto* p = std::get_if<PredicateRef>(&m); p && p->index == idx) return true;
    return false;
  }

  void compute(SessionState& s, bool reach) {
    s.seed = mix_seed(cfg_.seed, mix_seed(questions_, path_.size()));
    if (reach) {
      ReachOptions ro = cfg_.reach;
      ro.epsilon = s.params.epsilon;
      ro.merge = s.params.merge_enabled;
      s.reach = build_reachset(s.question, *pack_, *model_, ro, s.seed, decider_);
    }
    DescriptionOptions d = cfg_.description;
    d.n_sample = s.params.n_sample;
    d.alpha = s.params.alpha;
    d.produce_greater_abstraction = s.params.produce_greater_abstraction;
    d.ignored = s.params.ignored;
    Rng rng(mix_seed(s.seed, 0xd35c));
    s.message.clear();
    s.description = {};
    try {
      s.description = generate_description(s.reach.illuminated(illuminated_side(s.question.type)), *pack_, d, rng,
                                           decider_);
    } catch (const NoSituationError& e) {
      s.message = e.what();
    }
  }

  void push(SessionState s) {
    s.id = path_.size();
    path_.push_back(std::move(s));
  }

  void log(const SessionState& s, Reply reply) {
    store_->append({question_id_, s.id, omega_counts(s.description, *pack_), reply, hash(s)});
  }

  std::shared_ptr<const DomainPack> pack_;
  std::shared_ptr<const BoundModel> model_;
  SessionConfig cfg_;
  Decider decider_;
  std::shared_ptr<HistoryStore> store_;
  std::vector<SessionState> path_;
  std::string question_id_;
  std::size_t questions_ = 0;
};

}  // namespace illum
