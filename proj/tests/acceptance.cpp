// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance            run every criterion
//   acceptance <name>...  run the named ones
//
// Exit status is the number of failed criteria (capped at 100).

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

#include "illum/experiment.hpp"
#include "illum/fit.hpp"
#include "illum/io.hpp"
#include "illum/service.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace illum;
using namespace illum::testing;

namespace {

// Tolerances and budgets.
constexpr std::size_t kSoundnessChecks = 100000;
constexpr double kSoundnessSeconds = 60.0;
constexpr std::size_t kReachGrid = 10000;
constexpr double kReachSeconds = 1.0;
constexpr std::size_t kCoverageRuns = 200;
constexpr std::size_t kCoverageCap = 800;
constexpr std::size_t kCoveringInstances = 100;
constexpr std::size_t kDirectionRuns = 50;
constexpr std::size_t kDirectionCap = 1500;
constexpr double kDirectionSeconds = 300.0;
constexpr double kR2Floor = 0.85;
constexpr double kR2Target = 0.9;
constexpr std::size_t kApsHistories = 1000;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string src(const std::string& rel) { return std::string(ILLUM_SOURCE_DIR) + "/" + rel; }

struct Desk {
  std::shared_ptr<DomainPack> pack;
  std::shared_ptr<BoundModel> model;
};

Desk desk(const std::string& name) {
  std::string base = src("packs/" + name);
  auto pack = std::make_shared<DomainPack>(load_pack(base + ".json", base + "_labels.json"));
  auto model = std::make_shared<BoundModel>(load_model(base + "_model.json", pack->space()));
  return {pack, model};
}

Decider checking_decider() { return Decider(find_z3(), 256); }

// ---------------------------------------------------------------------------

Outcome soundness() {
  auto t0 = Clock::now();
  Rng rng(20240601);
  std::vector<std::unique_ptr<LearnedSystem>> systems;
  std::vector<std::vector<Interval>> domains;
  for (int i = 0; i < 20; ++i) {
    std::size_t in = 1 + rng() % 4, out = 1 + rng() % 3;
    systems.push_back(std::make_unique<FeedForwardNetwork>(random_network(rng, in, out)));
    domains.emplace_back(in, Interval{-2.0, 2.0});
  }
  auto cpu = desk("cpu");
  const LearnedSystem& poly = cpu.model->system();
  std::vector<Interval> cpu_dom;
  for (VarIndex v : cpu.pack->space().inputs()) cpu_dom.push_back(cpu.pack->space().var(v).bounds);

  std::size_t checks = 0, bad = 0;
  const std::size_t per_model = kSoundnessChecks / (systems.size() + 1) + 1;
  auto run = [&](const LearnedSystem& m, const std::vector<Interval>& dom) {
    for (std::size_t done = 0; done < per_model;) {
      std::vector<Interval> box(dom.size());
      for (std::size_t k = 0; k < dom.size(); ++k) {
        double a = uniform(rng, dom[k].lo, dom[k].hi), b = uniform(rng, dom[k].lo, dom[k].hi);
        if (uniform01(rng) < 0.1) b = a;  // degenerate axes too
        box[k] = {std::min(a, b), std::max(a, b)};
      }
      auto img = m.image(box);
      for (int s = 0; s < 10; ++s, ++done) {
        std::vector<double> x(dom.size());
        for (std::size_t k = 0; k < dom.size(); ++k)
          x[k] = s == 0 ? box[k].lo : s == 1 ? box[k].hi : uniform(rng, box[k].lo, box[k].hi);
        auto y = m.evaluate(x);
        ++checks;
        for (std::size_t j = 0; j < y.size(); ++j)
          if (!(img[j].lo <= y[j] && y[j] <= img[j].hi)) {
            ++bad;
            break;
          }
      }
    }
  };
  for (std::size_t i = 0; i < systems.size(); ++i) run(*systems[i], domains[i]);
  run(poly, cpu_dom);
  double secs = seconds_since(t0);
  return {bad == 0 && checks >= kSoundnessChecks && secs < kSoundnessSeconds,
          std::to_string(checks - bad) + "/" + std::to_string(checks) + " containment checks, " + fmt("%.1f s", secs)};
}

Outcome reach_oracle() {
  auto t0 = Clock::now();
  auto pack = identity_pack();
  auto model = identity_model(*pack);
  ReachOptions ro;
  ro.epsilon = 0.25;
  ro.analysis.force_k2 = true;
  auto rs = build_reachset(parse_question("when_do_you out_high?"), *pack, *model, ro, 1);
  auto boxes = rs.illuminated(Side::Input);
  double secs = seconds_since(t0);

  std::size_t missed = 0, stray = 0;
  for (std::size_t i = 0; i < kReachGrid; ++i) {
    double x = double(i) / double(kReachGrid - 1);
    bool in = std::any_of(boxes.begin(), boxes.end(), [&](const Box& b) { return b.contains(Point{x}); });
    if (x >= 0.75 && !in) ++missed;
    if (x < 0.75 - ro.epsilon && in) ++stray;  // one cell of slack below the threshold
  }
  bool bounded = std::all_of(boxes.begin(), boxes.end(), [&](const Box& b) {
    return b.axis(0).lo >= 0.75 - ro.epsilon && b.axis(0).hi <= 1.0;
  });
  return {missed == 0 && stray == 0 && bounded && secs < kReachSeconds,
          std::to_string(boxes.size()) + " boxes, " + std::to_string(missed) + " grid points missed, " +
              std::to_string(stray) + " outside [0.5,1], " + fmt("%.3f s", secs)};
}

Outcome coverage() {
  auto t0 = Clock::now();
  Desk packs[2] = {desk("idp"), desk("cpu")};
  Decider checker = checking_decider();
  std::size_t states = 0, boxes = 0, uncovered = 0, described = 0;
  for (std::size_t i = 0; i < kCoverageRuns; ++i) {
    const Desk& d = packs[i % 2];
    SessionConfig sc;
    sc.reach.analysis.max_boxes = kCoverageCap;
    auto run = synthetic_session(d.pack, d.model, (i / 2) % 2 == 0 ? Script::A : Script::B, mix_seed(77, i), sc);
    for (const auto& s : run.path) {
      if (s.terminal) continue;
      ++states;
      if (s.description.items.empty()) continue;
      ++described;
      Formula f = s.description.formula(*d.pack);
      for (const auto& b : s.description.boxes) {
        ++boxes;
        if (!checker.forall_holds(f, b).proven()) ++uncovered;
      }
    }
  }
  return {uncovered == 0 && described > 0,
          std::to_string(boxes - uncovered) + "/" + std::to_string(boxes) + " illuminated boxes certainly covered over " +
              std::to_string(described) + "/" + std::to_string(states) + " described states" +
              (find_z3() ? "" : " (no SMT solver)") + ", " + fmt("%.1f s", seconds_since(t0))};
}

Outcome covering() {
  Rng rng(4242);
  std::size_t worst_num = 0, worst_den = 1, over = 0;
  for (std::size_t t = 0; t < kCoveringInstances; ++t) {
    std::size_t nb = 1 + rng() % 6, np = 1 + rng() % 8;
    std::vector<std::vector<VarIndex>> vars(np);
    for (auto& v : vars) {
      for (VarIndex k = 0; k < 3; ++k)
        if (uniform01(rng) < 0.4) v.push_back(k);
      if (v.empty()) v.push_back(static_cast<VarIndex>(rng() % 3));
    }
    std::vector<std::vector<std::size_t>> inst(nb);
    for (auto& c : inst) {
      for (std::size_t p = 0; p < np; ++p)
        if (uniform01(rng) < 0.4) c.push_back(p);
      if (c.empty()) c.push_back(rng() % np);
    }
    VarsOf fv = [&](std::size_t p) { return vars[p]; };
    std::size_t greedy = get_max_cover(inst, fv, rng).size();
    std::size_t opt = brute_force_cover(inst, np, fv);
    if (greedy > 2 * opt) ++over;
    if (greedy * worst_den > worst_num * opt) worst_num = greedy, worst_den = opt;
  }
  return {over == 0, std::to_string(over) + " instances above 2x optimum, worst ratio " +
                         fmt("%.2f", double(worst_num) / double(worst_den))};
}

Outcome direction() {
  auto t0 = Clock::now();
  std::vector<PackRuns> all;
  std::uint64_t seed = 2024;
  for (const char* name : {"idp", "cpu"}) {
    auto d = desk(name);
    ExperimentConfig ec;
    ec.runs = kDirectionRuns;
    ec.seed = seed++;
    ec.jobs = std::max(1u, std::thread::hardware_concurrency());
    ec.session.reach.analysis.max_boxes = kDirectionCap;
    all.push_back(run_experiment(d.pack, d.model, ec));
  }
  double secs = seconds_since(t0);

  // MetricsRow order: Volume Max..Sum, Jaccard, Disjuncts, Named preds.
  const std::size_t volume[] = {5, 6, 7, 8};
  const std::size_t jaccard = 9, disjuncts = 12, named = 13;
  bool ok = secs < kDirectionSeconds;
  std::ostringstream os;
  for (const auto& c : aggregate(all)) {
    bool ma = c.request == ResponseKind::MoreAbstract;
    double up = ma ? 1.0 : -1.0;
    auto check = [&](std::size_t k, double sign) {
      double v = c.medians[k];
      bool good = v * sign > 0.0;
      ok = ok && good;
      os << "\n    " << (good ? "ok  " : "BAD ") << c.pack << ' ' << response_name(c.request) << ' ' << metric_name(k)
         << " median " << format_metric(v) << (sign > 0 ? " (want > 0)" : " (want < 0)");
    };
    for (auto k : volume) check(k, up);
    check(disjuncts, -up);
    check(named, -up);
    bool jac = c.medians[jaccard] < 1.0;
    ok = ok && jac;
    os << "\n    " << (jac ? "ok  " : "BAD ") << c.pack << ' ' << response_name(c.request) << " Jaccard median "
       << format_metric(c.medians[jaccard]) << " (want < 1)";
  }
  std::size_t capped = 0, sessions = 0;
  for (const auto& pr : all)
    for (const auto& r : pr.runs) capped += r.cap_hit, ++sessions;
  return {ok, std::to_string(sessions) + " sessions, " + std::to_string(capped) + " hit the box budget, " +
                  fmt("%.1f s", secs) + os.str()};
}

Outcome cpu_r2() {
  std::string path = std::getenv("ILLUM_CPU_CSV") ? std::getenv("ILLUM_CPU_CSV") : src("data/cpu_small.csv");
  if (!std::filesystem::exists(path)) return {false, "dataset not found at " + path + " (set ILLUM_CPU_CSV)"};
  auto data = select_columns(read_csv_file(path), {"lread", "scall", "sread", "freemem", "freeswap"},
                             {"lwrite", "swrite", "usr"});
  auto res = fit_polynomial(data, 3, FitOptions{0.1, 0, true});
  std::string band = res.test_r2 >= kR2Target ? "" : res.test_r2 > kR2Floor ? " (warning: below 0.9)" : "";
  return {res.test_r2 > kR2Floor, "degree 3, test R^2 " + fmt("%.4f", res.test_r2) + " on " +
                                      std::to_string(res.test_rows) + " held-out rows" + band};
}

Outcome aps() {
  Rng rng(99);
  std::size_t mismatches = 0;
  for (std::size_t t = 0; t < kApsHistories; ++t) {
    std::size_t k = 1 + rng() % 10;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < k; ++i) names.push_back("p" + std::to_string(i));
    auto h = random_history(rng, names);
    std::shuffle(names.begin(), names.end(), rng);
    Reply dir = uniform01(rng) < 0.5 ? Reply::MoreAbstract : Reply::LessAbstract;
    if (aps_select(h, names, dir) != brute_force_aps(h, names, dir)) ++mismatches;
  }
  return {mismatches == 0, std::to_string(kApsHistories - mismatches) + "/" + std::to_string(kApsHistories) +
                               " histories agree with exhaustive UCB1"};
}

Outcome determinism() {
  auto dir = std::filesystem::temp_directory_path() / ("illum_accept_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  std::string packs;
  for (const char* n : {"idp", "cpu"}) {
    std::string b = src(std::string("packs/") + n);
    packs += " --pack " + b + ".json --model " + b + "_model.json --labels " + b + "_labels.json";
  }
  std::vector<std::string> files;
  int rc = 0;
  for (int k = 0; k < 2; ++k) {
    std::string out = (dir / ("r" + std::to_string(k) + ".csv")).string();
    std::string tr = (dir / ("t" + std::to_string(k) + ".csv")).string();
    std::string cmd = std::string(ILLUM_CLI) + " experiment run" + packs + " --runs 8 --jobs 2 --max-boxes 600" +
                      " --seed 31 --out " + out + " --transitions " + tr + " 2>/dev/null";
    rc |= std::system(cmd.c_str());
    files.push_back(read_file(out) + "\n--\n" + read_file(tr));
  }
  std::filesystem::remove_all(dir);
  if (rc != 0) return {false, "CLI experiment run failed"};
  bool same = files[0] == files[1];
  return {same, same ? std::to_string(files[0].size()) + " bytes identical across two runs" : "outputs differ"};
}

Outcome ui_contract() {
  ServiceOptions opt;
  opt.session.reach.analysis.max_boxes = 1000;
  Service svc(std::move(opt));
  std::vector<Desk> desks = {desk("idp"), desk("cpu")};
  for (const auto& d : desks) svc.add_pack(d.pack, d.model, d.pack->name());
  int port = svc.bind("127.0.0.1", 0);
  std::thread th([&] { svc.serve(); });
  svc.wait_until_ready();
  httplib::Client cli("127.0.0.1", port);
  cli.set_read_timeout(120, 0);

  auto call = [&](const std::string& method, const std::string& path, const json& body = nullptr) -> json {
    auto r = method == "GET" ? cli.Get(path) : cli.Post(path, body.dump(), "application/json");
    if (!r) return {{"status", 0}};
    json j = json::parse(r->body, nullptr, false);
    if (j.is_discarded()) j = json::object();
    j["status"] = r->status;
    while (j["status"] == 202) {
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
      auto p = cli.Get(j.at("poll").get<std::string>());
      j = json::parse(p->body);
      j["status"] = p->status;
    }
    return j;
  };

  std::size_t filter_bad = 0;
  for (const auto& d : desks)
    for (auto t : {QuestionType::WhenDoYou, QuestionType::WhatDoYouDoWhen, QuestionType::Circumstances}) {
      auto j = call("GET", "/packs/" + d.pack->name() + "/predicates?questionType=" + question_type_name(t));
      std::vector<std::string> names;
      for (const auto& p : j.value("predicates", json::array())) names.push_back(p.at("name"));
      if (names != allowed_predicates(*d.pack, t)) ++filter_bad;
    }

  auto id = call("POST", "/sessions", {{"pack", "idp"}}).value("id", std::string());
  std::string base = "/sessions/" + id;
  auto first = allowed_predicates(*desks[0].pack, QuestionType::WhenDoYou).front();
  int s1 = call("POST", base + "/question", {{"type", "when_do_you"}, {"dnf", {{first}}}})["status"];
  int s2 = call("POST", base + "/response", {{"kind", "ma"}})["status"];
  int s3 = call("POST", base + "/response", {{"kind", "history"}, {"arg", 0}})["status"];
  int s4 = call("POST", base + "/response", {{"kind", "exit"}})["status"];
  auto hist = call("GET", base + "/history");
  std::size_t nodes = hist.value("nodes", json::array()).size();
  svc.stop();
  th.join();

  bool flow = s1 == 200 && s2 == 200 && s3 == 200 && s4 == 200 && nodes == 4;
  return {filter_bad == 0 && flow, std::to_string(6 - filter_bad) + "/6 predicate filters match, flow statuses " +
                                       std::to_string(s1) + "," + std::to_string(s2) + "," + std::to_string(s3) + "," +
                                       std::to_string(s4) + ", history has " + std::to_string(nodes) + " nodes"};
}

struct Criterion {
  const char* name;
  const char* level;
  Outcome (*run)();
};

const Criterion kCriteria[] = {
    {"soundness", "PRIMARY", soundness},      {"reach_oracle", "PRIMARY", reach_oracle},
    {"coverage", "PRIMARY", coverage},        {"covering", "PRIMARY", covering},
    {"direction", "PRIMARY", direction},      {"cpu_r2", "PRIMARY", cpu_r2},
    {"aps", "PRIMARY", aps},                  {"determinism", "PRIMARY", determinism},
    {"ui_contract", "SECONDARY", ui_contract},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> want(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& c : kCriteria) {
    if (!want.empty() && std::find(want.begin(), want.end(), c.name) == want.end()) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << c.level << "] " << c.name << ": " << o.detail << std::endl;
    failed += !o.pass;
  }
  for (const auto& w : want)
    if (std::none_of(std::begin(kCriteria), std::end(kCriteria), [&](const Criterion& c) { return w == c.name; })) {
      std::cerr << "unknown criterion '" << w << "'\n";
      return 100;
    }
  return std::min(failed, 100);
}
