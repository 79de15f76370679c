#pragma once

// HTTP/JSON front end over Session. Mutations on one session are serialized:
// a second POST while one is running gets 409. A mutation that outlives
// `wait_ms` answers 202 with a token to poll at GET /jobs/{token}.

#include <atomic>
#include <chrono>
#include <functional>
#include <thread>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include <nlohmann/json.hpp>

// Eigen must come first: httplib pulls in <resolv.h>, whose `_res` macro
// collides with Eigen parameter names.
#include "illum/io.hpp"
#include "illum/question.hpp"
#include "illum/session.hpp"

#include <httplib/httplib.h>

namespace illum {

struct ServiceOptions {
  SessionConfig session;
  Decider decider;
  std::chrono::milliseconds wait_ms{2000};
  std::shared_ptr<HistoryStore> history;  // shared by every session; in-memory when null
};

class HttpError : public Error {
 public:
  HttpError(int status, const std::string& msg, json extra = json::object())
      : Error(msg), status(status), extra(std::move(extra)) {}
  int status;
  json extra;
};

inline QuestionType question_type_from_api(const std::string& s) {
  if (s == "when_do_you" || s == "WhenDoYou") return QuestionType::WhenDoYou;
  if (s == "what_do_you_do_when" || s == "WhatDoYouDoWhen") return QuestionType::WhatDoYouDoWhen;
  if (s == "what_are_the_circumstances_in_which" || s == "Circumstances") return QuestionType::Circumstances;
  throw HttpError(400, "unknown question type '" + s + "'");
}

inline Strength strength_from_api(const std::string& s) {
  if (s == "strict" || s == "Strict") return Strength::Strict;
  if (s == "usually" || s == "Usually") return Strength::Usually;
  throw HttpError(400, "unknown strength '" + s + "'");
}

inline json state_to_json(const SessionState& s, const DomainPack& pack) {
  json j = {{"id", s.id},
            {"parent", s.parent ? json(*s.parent) : json(nullptr)},
            {"created_by", s.created_by ? json(response_name(s.created_by->kind)) : json(nullptr)},
            {"terminal", s.terminal},
            {"epsilon", s.params.epsilon},
            {"merge", s.params.merge_enabled},
            {"greater_abstraction", s.params.produce_greater_abstraction},
            {"hash", snapshot_hash(s, pack)}};
  if (!s.dropped.empty()) j["dropped"] = s.dropped;
  if (!s.terminal) {
    j["description"] = description_to_json(s.description, pack);
    j["text"] = render_description(s.description, pack);
    j["message"] = s.message;
    j["boxes"] = s.reach.pairs.size();
  }
  return j;
}

class Service {
 public:
  explicit Service(ServiceOptions opt) : opt_(std::move(opt)) {
    if (!opt_.history) opt_.history = std::make_shared<HistoryStore>();
    routes();
  }
  ~Service() { stop(); }

  /// Registers a pack (and optionally one model over it); returns the pack id.
  std::string add_pack(std::shared_ptr<const DomainPack> pack, std::shared_ptr<const BoundModel> model = nullptr,
                       std::string id = "") {
    std::lock_guard<std::mutex> lock(mu_);
    if (id.empty()) id = unique_id(pack->name(), packs_);
    auto& e = packs_[id];
    e.pack = std::move(pack);
    if (model) e.models["default"] = std::move(model);
    return id;
  }

  /// Binds to `port` (0 = any free port) and returns the bound port.
  int bind(const std::string& host, int port) {
    if (port == 0) return server_.bind_to_any_port(host);
    if (!server_.bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
    return port;
  }
  bool serve() { return server_.listen_after_bind(); }
  void stop() {
    if (server_.is_running()) server_.stop();
    std::lock_guard<std::mutex> lock(mu_);
    for (auto& [_, j] : jobs_)
      if (j.result.valid()) j.result.wait();
  }
  void wait_until_ready() const { server_.wait_until_ready(); }

  httplib::Server& server() { return server_; }

 private:
  struct PackEntry {
    std::shared_ptr<const DomainPack> pack;
    std::map<std::string, std::shared_ptr<const BoundModel>> models;
  };

  struct ApiSession {
    std::string id, pack_id, model_id;
    std::unique_ptr<Session> session;
    std::atomic<bool> busy{false};  // set for the whole of a mutation
    std::mutex snap_mu;
    std::shared_ptr<const json> history = std::make_shared<json>(json::array());
  };

  struct Job {
    std::string session;
    std::shared_future<std::pair<int, json>> result;
  };

  template <class M>
  static std::string unique_id(const std::string& base, const M& m) {
    std::string stem = base.empty() ? "pack" : base;
    if (m.count(stem) == 0) return stem;
    for (std::size_t i = 2;; ++i)
      if (m.count(stem + "-" + std::to_string(i)) == 0) return stem + "-" + std::to_string(i);
  }

  static json body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
      return json::parse(req.body);
    } catch (const json::parse_error& e) {
      throw HttpError(400, std::string("malformed JSON: ") + e.what());
    }
  }

  static void reply(httplib::Response& res, int status, json j) {
    j["v"] = kFormatVersion;
    res.status = status;
    res.set_content(j.dump(), "application/json");
  }

  template <class F>
  static auto guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const HttpError& e) {
        json j = e.extra;
        j["error"] = e.what();
        reply(res, e.status, j);
      } catch (const Session::ValidationError& e) {
        reply(res, 400, {{"error", "validation"}, {"violations", e.violations}});
      } catch (const json::exception& e) {
        reply(res, 400, {{"error", std::string("bad request: ") + e.what()}});
      } catch (const Error& e) {
        reply(res, 400, {{"error", e.what()}});
      }
    };
  }

  std::shared_ptr<ApiSession> session(const std::string& id) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw HttpError(404, "unknown session '" + id + "'");
    return it->second;
  }

  const PackEntry& pack_entry(const std::string& id) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = packs_.find(id);
    if (it == packs_.end()) throw HttpError(404, "unknown pack '" + id + "'");
    return it->second;
  }

  static std::shared_ptr<const json> snapshot(ApiSession& s) {
    std::lock_guard<std::mutex> lock(s.snap_mu);
    return s.history;
  }

  static void publish(ApiSession& s) {
    json h = json::array();
    for (const auto& st : s.session->path()) h.push_back(state_to_json(st, s.session->pack()));
    auto p = std::make_shared<const json>(std::move(h));
    std::lock_guard<std::mutex> lock(s.snap_mu);
    s.history = std::move(p);
  }

  static json current_payload(ApiSession& s) {
    const auto& cur = s.session->current();
    json j = state_to_json(cur, s.session->pack());
    j["session"] = s.id;
    j["question"] = render_question(cur.question);
    return j;
  }

  // Runs `work` with the session marked busy; answers inline when it
  // finishes within wait_ms, otherwise with 202 and a poll token.
  void mutate(const std::shared_ptr<ApiSession>& s, httplib::Response& res, std::function<json()> work) {
    bool expected = false;
    if (!s->busy.compare_exchange_strong(expected, true))
      throw HttpError(409, "another operation is in progress for this session");
    auto task = std::make_shared<std::packaged_task<std::pair<int, json>()>>(
        [s, work = std::move(work)]() -> std::pair<int, json> {
          std::pair<int, json> out;
          try {
            out = {200, work()};
          } catch (const Session::ValidationError& e) {
            out = {400, json{{"error", "validation"}, {"violations", e.violations}}};
          } catch (const HttpError& e) {
            json j = e.extra;
            j["error"] = e.what();
            out = {e.status, j};
          } catch (const std::exception& e) {
            out = {400, json{{"error", e.what()}}};
          }
          publish(*s);
          s->busy.store(false);
          return out;
        });
    std::shared_future<std::pair<int, json>> fut = task->get_future().share();
    std::thread([task] { (*task)(); }).detach();
    if (fut.wait_for(opt_.wait_ms) == std::future_status::ready) {
      auto [status, j] = fut.get();
      reply(res, status, j);
      return;
    }
    std::string token;
    {
      std::lock_guard<std::mutex> g(mu_);
      token = "job-" + std::to_string(++job_counter_);
      jobs_[token] = {s->id, fut};
    }
    reply(res, 202, {{"token", token}, {"poll", "/jobs/" + token}});
  }

  void routes() {
    server_.Post("/packs", guarded([this](const httplib::Request& req, httplib::Response& res) {
      json b = body(req);
      auto pack = std::make_shared<DomainPack>(pack_from_json(b.contains("pack") ? b.at("pack") : b));
      if (b.contains("labels")) apply_labels(*pack, b.at("labels"));
      std::shared_ptr<const BoundModel> model;
      if (b.contains("model")) model = std::make_shared<BoundModel>(model_from_json(b.at("model"), pack->space()));
      std::string id = add_pack(pack, model, b.value("id", ""));
      reply(res, 201, {{"id", id}, {"predicates", pack->predicates().size()}, {"has_model", static_cast<bool>(model)}});
    }));

    server_.Get("/packs", guarded([this](const httplib::Request&, httplib::Response& res) {
      json arr = json::array();
      std::lock_guard<std::mutex> lock(mu_);
      for (const auto& [id, e] : packs_) {
        json models = json::array();
        for (const auto& [m, _] : e.models) models.push_back(m);
        arr.push_back({{"id", id}, {"name", e.pack->name()}, {"models", models}});
      }
      reply(res, 200, {{"packs", arr}});
    }));

    server_.Get(R"(/packs/([^/]+)/predicates)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto& e = pack_entry(req.matches[1]);
      std::optional<QuestionType> t;
      if (req.has_param("questionType")) t = question_type_from_api(req.get_param_value("questionType"));
      json arr = json::array();
      for (const auto& p : e.pack->predicates()) {
        if (t && !predicate_allowed(p, *t)) continue;
        json o = {{"name", p.name}, {"role", role_tag_name(p.tag)}};
        if (p.label) o["label"] = *p.label == AbstractLabel::MA ? "MA" : "LA";
        arr.push_back(std::move(o));
      }
      reply(res, 200, {{"predicates", arr}});
    }));

    server_.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
      json b = body(req);
      std::string pack_id = b.at("pack").get<std::string>();
      std::string model_id = b.value("model", "default");
      const auto& e = pack_entry(pack_id);
      auto mit = e.models.find(model_id);
      if (mit == e.models.end()) throw HttpError(404, "unknown model '" + model_id + "' for pack '" + pack_id + "'");
      SessionConfig cfg = opt_.session;
      if (b.contains("epsilon")) {
        double eps = b.at("epsilon").get<double>();
        if (!(eps >= kEpsilonMin && eps <= kEpsilonMax)) throw HttpError(400, "epsilon must lie in [0.001, 1]");
        cfg.initial.epsilon = eps;
      }
      if (b.contains("seed")) cfg.seed = b.at("seed").get<std::uint64_t>();
      auto s = std::make_shared<ApiSession>();
      {
        std::lock_guard<std::mutex> lock(mu_);
        s->id = "s" + std::to_string(++session_counter_);
      }
      cfg.name = s->id;
      s->pack_id = pack_id;
      s->model_id = model_id;
      s->session = std::make_unique<Session>(e.pack, mit->second, cfg, opt_.decider, opt_.history);
      {
        std::lock_guard<std::mutex> lock(mu_);
        sessions_[s->id] = s;
      }
      reply(res, 201, {{"id", s->id}, {"pack", pack_id}, {"model", model_id}, {"epsilon", cfg.initial.epsilon}});
    }));

    server_.Post(R"(/sessions/([^/]+)/question)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto s = session(req.matches[1]);
      json b = body(req);
      Question q;
      if (b.contains("text")) {
        q = parse_question(b.at("text").get<std::string>());
      } else {
        q.type = question_type_from_api(b.at("type").get<std::string>());
        q.strength = strength_from_api(b.value("strength", "strict"));
        q.content = b.at("dnf").get<std::vector<std::vector<std::string>>>();
      }
      for (const auto& c : q.content)
        for (const auto& n : c)
          if (!s->session->pack().find(n))
            throw HttpError(400, "validation", {{"violations", {"unknown predicate '" + n + "'"}}});
      mutate(s, res, [s, q] {
        s->session->ask(q);
        return current_payload(*s);
      });
    }));

    server_.Post(R"(/sessions/([^/]+)/response)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto s = session(req.matches[1]);
      json b = body(req);
      std::string kind = b.at("kind").get<std::string>();
      Response r;
      if (kind == "ma") r = Response::more();
      else if (kind == "la") r = Response::less();
      else if (kind == "exit" || kind == "b") r = Response::exit();
      else if (kind == "history") r = Response::history(b.at("arg").get<std::size_t>());
      else if (kind == "ignore") r = Response::ignore(b.at("arg").get<std::string>());
      else if (kind == "aps") r = Response::aps(b.value("arg", "ma") != "la");
      else throw HttpError(400, "unknown response kind '" + kind + "'");
      mutate(s, res, [s, r] {
        if (!s->session->active()) throw HttpError(409, "no active question; POST a question first");
        s->session->respond(r);
        return current_payload(*s);
      });
    }));

    server_.Get(R"(/sessions/([^/]+)/description)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto s = session(req.matches[1]);
      auto h = snapshot(*s);
      if (h->empty()) throw HttpError(404, "no question has been asked in this session");
      json j = h->back();
      j["session"] = s->id;
      reply(res, 200, j);
    }));

    server_.Get(R"(/sessions/([^/]+)/history)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto s = session(req.matches[1]);
      reply(res, 200, {{"session", s->id}, {"nodes", *snapshot(*s)}});
    }));

    server_.Get(R"(/jobs/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      std::shared_future<std::pair<int, json>> fut;
      {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = jobs_.find(req.matches[1]);
        if (it == jobs_.end()) throw HttpError(404, "unknown job");
        fut = it->second.result;
      }
      if (fut.wait_for(std::chrono::milliseconds(0)) != std::future_status::ready) {
        std::string token = req.matches[1];
        reply(res, 202, {{"status", "running"}, {"token", token}, {"poll", "/jobs/" + token}});
        return;
      }
      auto [status, j] = fut.get();
      reply(res, status, j);
    }));
  }

  ServiceOptions opt_;
  httplib::Server server_;
  std::mutex mu_;
  std::map<std::string, PackEntry> packs_;
  std::map<std::string, std::shared_ptr<ApiSession>> sessions_;
  std::map<std::string, Job> jobs_;
  std::size_t session_counter_ = 0, job_counter_ = 0;
};

}  // namespace illum
