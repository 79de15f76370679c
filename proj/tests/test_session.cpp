#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "illum/session.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace illum;
using namespace illum::testing;

namespace {

Session make_session(std::uint64_t seed = 1, std::shared_ptr<HistoryStore> store = nullptr) {
  auto pack = identity_pack();
  auto model = identity_model(*pack);
  SessionConfig cfg;
  cfg.seed = seed;
  cfg.initial.epsilon = 0.125;
  return Session(pack, model, cfg, Decider{}, std::move(store));
}

Question high() { return {QuestionType::WhenDoYou, Strength::Strict, {{"out_high"}}}; }

bool mentions(const Description& d, std::size_t idx) {
  for (const auto& it : d.items)
    for (const auto& m : it.condition.members())
      if (const auto* p = std::get_if<PredicateRef>(&m); p && p->index == idx) return true;
  return false;
}

std::string temp_path(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("illum_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove(p);
  return p.string();
}

}  // namespace

TEST(Session, AskProducesDescription) {
  auto s = make_session();
  const auto& st = s.ask(high());
  EXPECT_FALSE(st.description.items.empty());
  EXPECT_TRUE(st.message.empty());
  EXPECT_EQ(st.id, 0u);
  EXPECT_FALSE(st.parent.has_value());
}

TEST(Session, InvalidQuestionRejected) {
  auto s = make_session();
  try {
    s.ask({QuestionType::WhenDoYou, Strength::Strict, {{"x_low"}}});
    FAIL();
  } catch (const Session::ValidationError& e) {
    ASSERT_EQ(e.violations.size(), 1u);
    EXPECT_NE(e.violations[0].find("x_low"), std::string::npos);
  }
  EXPECT_THROW(s.ask({QuestionType::WhenDoYou, Strength::Strict, {{"nope"}}}), Error);
}

TEST(Session, MoreThenLessRestoresEpsilon) {
  auto s = make_session();
  s.ask(high());
  double e0 = s.current().params.epsilon;
  s.respond(Response::more());
  EXPECT_DOUBLE_EQ(s.current().params.epsilon, 2 * e0);
  EXPECT_TRUE(s.current().params.merge_enabled);
  EXPECT_TRUE(s.current().params.produce_greater_abstraction);
  EXPECT_TRUE(s.current().reach.merged);
  s.respond(Response::less());
  EXPECT_DOUBLE_EQ(s.current().params.epsilon, e0);
  EXPECT_FALSE(s.current().params.merge_enabled);
  EXPECT_FALSE(s.current().params.produce_greater_abstraction);
  EXPECT_EQ(*s.current().parent, 1u);
}

TEST(Session, EpsilonStaysInRange) {
  Rng rng(3);
  auto s = make_session();
  s.ask(high());
  for (int i = 0; i < 40; ++i) {
    bool more = uniform01(rng) < (i < 20 ? 0.8 : 0.2);
    s.respond(more ? Response::more() : Response::less());
    double e = s.current().params.epsilon;
    EXPECT_GE(e, kEpsilonMin);
    EXPECT_LE(e, kEpsilonMax);
  }
}

TEST(Session, HistoryReplaysStoredState) {
  auto s = make_session();
  s.ask(high());
  s.respond(Response::less());
  std::string h0 = s.hash(s.path()[0]), h1 = s.hash(s.path()[1]);
  std::string r0 = render_description(s.path()[0].description, s.pack());
  s.respond(Response::history(0));
  EXPECT_EQ(render_description(s.current().description, s.pack()), r0);
  EXPECT_EQ(s.hash(s.current()), h0);
  EXPECT_EQ(s.current().params.epsilon, s.path()[0].params.epsilon);
  // stored ancestors untouched
  EXPECT_EQ(s.hash(s.path()[0]), h0);
  EXPECT_EQ(s.hash(s.path()[1]), h1);
  EXPECT_THROW(s.respond(Response::history(17)), Error);
}

TEST(Session, IgnoreRemovesPredicate) {
  auto s = make_session();
  s.ask(high());
  auto names = s.candidates(s.current().description);
  ASSERT_FALSE(names.empty());
  std::size_t idx = s.pack().require(names[0]);
  s.respond(Response::ignore(names[0]));
  EXPECT_FALSE(mentions(s.current().description, idx));
  EXPECT_EQ(s.current().params.ignored.count(idx), 1u);
  EXPECT_EQ(s.current().reach.pairs.size(), s.path()[0].reach.pairs.size());
  EXPECT_THROW(s.respond(Response::ignore("out_low")), Error);
  EXPECT_THROW(s.respond(Response::ignore("not_a_predicate")), Error);
}

TEST(Session, ExitIsTerminal) {
  auto s = make_session();
  s.ask(high());
  s.respond(Response::exit());
  EXPECT_TRUE(s.current().terminal);
  EXPECT_FALSE(s.active());
  EXPECT_THROW(s.respond(Response::more()), Error);
  s.ask(high());
  EXPECT_TRUE(s.active());
  EXPECT_EQ(s.path().size(), 1u);
}

TEST(Session, FourNodePath) {
  auto s = make_session();
  s.ask(high());
  s.respond(Response::more());
  s.respond(Response::history(0));
  s.respond(Response::exit());
  ASSERT_EQ(s.path().size(), 4u);
  for (std::size_t i = 1; i < 4; ++i) EXPECT_EQ(*s.path()[i].parent, i - 1);
}

TEST(Session, NoSituationMessage) {
  auto pack = identity_pack();
  pack->add_predicate("out_never", Formula::atom(ge(1, 2.0)), RoleTag::OutputSpace);
  Session s(pack, identity_model(*pack), SessionConfig{});
  const auto& st = s.ask({QuestionType::WhenDoYou, Strength::Strict, {{"out_never"}}});
  EXPECT_TRUE(st.description.items.empty());
  EXPECT_EQ(st.message, kNoSituation);
}

TEST(Session, DeterministicUnderSeed) {
  std::vector<std::string> hashes[2];
  for (int k = 0; k < 2; ++k) {
    auto s = make_session(77);
    s.ask(high());
    s.respond(Response::less());
    s.respond(Response::more());
    s.respond(Response::aps(true));
    for (const auto& st : s.path()) hashes[k].push_back(s.hash(st));
  }
  EXPECT_EQ(hashes[0], hashes[1]);
}

TEST(Session, RecordsLoggedPerReply) {
  auto store = std::make_shared<HistoryStore>();
  auto s = make_session(5, store);
  s.ask(high());
  s.respond(Response::more());
  s.respond(Response::aps(false));
  s.respond(Response::exit());
  auto recs = store->records();
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_EQ(recs[0].reply, Reply::MoreAbstract);
  EXPECT_EQ(recs[1].reply, Reply::LessAbstract);
  EXPECT_EQ(recs[2].reply, Reply::Break);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(recs[i].step, i);
    EXPECT_EQ(recs[i].omega, omega_counts(s.path()[i].description, s.pack()));
  }
}

// ---------------------------------------------------------------------------
// APS

TEST(Aps, EmptyHistoryPicksFirst) {
  EXPECT_EQ(aps_select({}, {"b", "a", "c"}, Reply::MoreAbstract), "b");
  EXPECT_THROW(aps_select({}, {}, Reply::MoreAbstract), Error);
}

TEST(Aps, HandCheckedUcb) {
  // p: tried twice, both followed by a break; q: tried twice, neither.
  std::vector<InteractionRecord> h;
  auto add = [&](const std::string& q, std::size_t step, std::map<std::string, std::size_t> w, Reply r) {
    h.push_back({q, step, std::move(w), r, ""});
  };
  add("a", 0, {{"p", 1}, {"q", 1}}, Reply::MoreAbstract);
  add("a", 1, {{"q", 1}}, Reply::Break);
  add("b", 0, {{"p", 1}, {"q", 1}}, Reply::MoreAbstract);
  add("b", 1, {{"q", 1}}, Reply::LessAbstract);
  add("c", 0, {{"p", 1}, {"q", 1}}, Reply::MoreAbstract);
  add("c", 1, {{"p", 1}}, Reply::MoreAbstract);
  add("d", 0, {{"p", 1}, {"q", 1}}, Reply::MoreAbstract);
  add("d", 1, {{"p", 1}}, Reply::Other);
  auto c = aps_counts(h, {"p", "q"}, Reply::MoreAbstract);
  EXPECT_EQ(c["p"].occ, 2u);
  EXPECT_EQ(c["p"].succ, 2u);
  EXPECT_EQ(c["q"].occ, 2u);
  EXPECT_EQ(c["q"].succ, 0u);
  // 2/2 + sqrt(2 ln 4 / 2) vs 0/2 + sqrt(2 ln 4 / 2)
  EXPECT_NEAR(ucb1_score(c["p"], 4), 1.0 + std::sqrt(std::log(4.0)), 1e-12);
  EXPECT_EQ(aps_select(h, {"q", "p"}, Reply::MoreAbstract), "p");
  // The same records say nothing about requests for less abstraction.
  EXPECT_EQ(aps_select(h, {"q", "p"}, Reply::LessAbstract), "q");
}

TEST(Aps, MissingSuccessorNeverCounts) {
  std::vector<InteractionRecord> h{{"a", 0, {{"p", 3}}, Reply::MoreAbstract, ""}};
  auto c = aps_counts(h, {"p"}, Reply::MoreAbstract);
  EXPECT_EQ(c["p"].occ, 0u);
}


TEST(Aps, MatchesBruteForce) {
  Rng rng(11);
  for (int t = 0; t < 1000; ++t) {
    std::size_t k = 1 + rng() % 10;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < k; ++i) names.push_back("p" + std::to_string(i));
    auto h = random_history(rng, names);
    std::shuffle(names.begin(), names.end(), rng);
    Reply dir = uniform01(rng) < 0.5 ? Reply::MoreAbstract : Reply::LessAbstract;
    ASSERT_EQ(aps_select(h, names, dir), brute_force_aps(h, names, dir)) << "case " << t;
  }
}

TEST(Aps, Deterministic) {
  Rng rng(12);
  std::vector<std::string> names{"a", "b", "c", "d"};
  auto h = random_history(rng, names);
  EXPECT_EQ(aps_select(h, names, Reply::MoreAbstract), aps_select(h, names, Reply::MoreAbstract));
}

// ---------------------------------------------------------------------------
// Log persistence

TEST(HistoryLog, RoundTrip) {
  auto path = temp_path("roundtrip");
  HistoryStore w(path);
  std::vector<InteractionRecord> recs{{"s:1", 0, {{"a", 2}}, Reply::MoreAbstract, "00ff"},
                                      {"s:1", 1, {}, Reply::Break, "0a0b"}};
  for (const auto& r : recs) w.append(r);
  HistoryStore r(path);
  EXPECT_EQ(r.load(), 0u);
  EXPECT_EQ(r.records(), recs);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(nlohmann::json::parse(line).at("v"), 1);
  std::filesystem::remove(path);
}

TEST(HistoryLog, EmptyStore) {
  HistoryStore s(temp_path("empty"));
  EXPECT_EQ(s.load(), 0u);
  EXPECT_TRUE(s.records().empty());
}

TEST(HistoryLog, CorruptLinesSkipped) {
  auto path = temp_path("corrupt");
  {
    std::ofstream out(path);
    out << to_json({"q", 0, {{"a", 1}}, Reply::LessAbstract, ""}).dump() << "\n";
    out << "{not json\n";
    out << R"({"v":2,"question":"q","step":1,"omega":{},"reply":"b"})" << "\n";
    out << to_json({"q", 1, {}, Reply::Break, ""}).dump() << "\n";
  }
  HistoryStore s(path);
  EXPECT_EQ(s.load(), 2u);
  EXPECT_EQ(s.records().size(), 2u);
  std::filesystem::remove(path);
}

TEST(HistoryLog, ReloadedCountsMatchStreaming) {
  auto path = temp_path("recount");
  Rng rng(13);
  std::vector<std::string> names{"a", "b", "c"};
  auto h = random_history(rng, names);
  while (h.size() < 100) {
    auto more = random_history(rng, names);
    for (auto& r : more) r.question += "x" + std::to_string(h.size());
    h.insert(h.end(), more.begin(), more.end());
  }
  h.resize(100);
  HistoryStore w(path);
  for (const auto& r : h) w.append(r);
  auto streaming = aps_counts(w.records(), names, Reply::MoreAbstract);
  HistoryStore r(path);
  r.load();
  auto reloaded = aps_counts(r.records(), names, Reply::MoreAbstract);
  for (const auto& n : names) {
    EXPECT_EQ(streaming[n].occ, reloaded[n].occ);
    EXPECT_EQ(streaming[n].succ, reloaded[n].succ);
  }
  std::filesystem::remove(path);
}
