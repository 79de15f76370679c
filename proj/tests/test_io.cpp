#include <gtest/gtest.h>

#include <sstream>

#include "illum/description.hpp"
#include "illum/io.hpp"
#include "illum/reachability.hpp"
#include "support.hpp"

using namespace illum;
using namespace illum::testing;

namespace {

Space xyz() { return Space({{"x", Role::Input, {-1, 1}}, {"vx", Role::Input, {0, 2}}, {"y", Role::Output, {0, 1}}}); }

std::string repo(const std::string& rel) { return std::string(ILLUM_SOURCE_DIR) + "/" + rel; }

}  // namespace

TEST(AtomText, ParsesAffineForms) {
  auto s = xyz();
  auto a = parse_atom("x - 0.5*vx <= 0.2", s);
  ASSERT_EQ(a.terms.size(), 2u);
  EXPECT_EQ(a.terms[0].var, 0u);
  EXPECT_DOUBLE_EQ(a.terms[0].coeff, 1.0);
  EXPECT_DOUBLE_EQ(a.terms[1].coeff, -0.5);
  EXPECT_DOUBLE_EQ(a.constant, -0.2);
  EXPECT_EQ(a.rel, Relation::Le);

  // variables on both sides collect on the left
  auto b = parse_atom("2 x + 1 > y", s);
  ASSERT_EQ(b.terms.size(), 2u);
  EXPECT_DOUBLE_EQ(b.terms[1].coeff, -1.0);
  EXPECT_DOUBLE_EQ(b.constant, 1.0);
  EXPECT_EQ(b.rel, Relation::Gt);

  EXPECT_EQ(parse_atom("x = 0", s).rel, Relation::Eq);
  EXPECT_EQ(parse_atom("x == 0", s).rel, Relation::Eq);
}

TEST(AtomText, Rejects) {
  auto s = xyz();
  EXPECT_THROW(parse_atom("z <= 1", s), Error);
  EXPECT_THROW(parse_atom("x <= ", s), Error);
  EXPECT_THROW(parse_atom("x ~ 1", s), Error);
  EXPECT_THROW(parse_atom("1 <= 2", s), Error);
  EXPECT_THROW(parse_atom("x - x <= 1", s), Error);
  EXPECT_THROW(parse_atom("x <= 1 junk", s), Error);
}

TEST(AtomText, RoundTripsRandomAtoms) {
  auto s = xyz();
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    Atom a = random_atom(rng, 3);
    Atom b = parse_atom(atom_to_string(a, s), s);
    ASSERT_EQ(a.terms.size(), b.terms.size()) << atom_to_string(a, s);
    for (std::size_t k = 0; k < a.terms.size(); ++k) {
      EXPECT_EQ(a.terms[k].var, b.terms[k].var);
      EXPECT_EQ(a.terms[k].coeff, b.terms[k].coeff);
    }
    EXPECT_EQ(a.constant == 0.0 ? 0.0 : a.constant, b.constant);
    EXPECT_EQ(a.rel, b.rel);
  }
}

TEST(FormulaJson, RangeAndConnectives) {
  auto s = xyz();
  json j = json::parse(R"({"or": [{"range": {"x": [0, 0.5]}}, {"and": ["vx >= 1", {"not": "y <= 0.5"}]}]})");
  auto f = formula_from_json(j, s);
  EXPECT_TRUE(eval_point(f, {0.25, 0.0, 0.0}));
  EXPECT_FALSE(eval_point(f, {0.75, 0.0, 0.0}));
  EXPECT_TRUE(eval_point(f, {0.75, 1.5, 0.9}));
  EXPECT_FALSE(eval_point(f, {0.75, 1.5, 0.1}));
  auto g = formula_from_json(formula_to_json(f, s), s);
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    Point x{uniform(rng, -1, 1), uniform(rng, 0, 2), uniform(rng, 0, 1)};
    ASSERT_EQ(eval_point(f, x), eval_point(g, x));
  }
  EXPECT_THROW(formula_from_json(json::parse(R"({"xor": []})"), s), Error);
  EXPECT_THROW(formula_from_json(json::parse(R"({"range": {"x": [1, 0]}})"), s), Error);
}

TEST(PackJson, TagsDefaultToVariableSide) {
  json j = json::parse(R"({
    "v": 1, "name": "t",
    "variables": [{"name": "a", "role": "input", "bounds": [0, 1]},
                  {"name": "o", "role": "output", "bounds": [0, 1]}],
    "predicates": [{"name": "a_hi", "formula": "a >= 0.5", "label": "MA"},
                   {"name": "o_hi", "formula": "o >= 0.5"},
                   {"name": "both", "dnf": [["a >= 0.5", "o >= 0.5"], ["a <= 0.1"]]},
                   {"name": "forced", "formula": "a >= 0.9", "role": "joint"}]})");
  auto p = pack_from_json(j);
  EXPECT_EQ(p.predicates().size(), 4u);
  EXPECT_EQ(p.predicate(0).tag, RoleTag::InputSpace);
  EXPECT_EQ(p.predicate(1).tag, RoleTag::OutputSpace);
  EXPECT_EQ(p.predicate(2).tag, RoleTag::Joint);
  EXPECT_EQ(p.predicate(3).tag, RoleTag::Joint);
  EXPECT_EQ(p.predicate(0).label, AbstractLabel::MA);
  EXPECT_FALSE(p.predicate(1).label.has_value());

  auto q = pack_from_json(pack_to_json(p));
  ASSERT_EQ(q.predicates().size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(q.predicate(i).name, p.predicate(i).name);
    EXPECT_EQ(q.predicate(i).tag, p.predicate(i).tag);
    EXPECT_EQ(q.predicate(i).label, p.predicate(i).label);
  }

  apply_labels(p, json::parse(R"({"v": 1, "labels": {"o_hi": "LA", "a_hi": null}})"));
  EXPECT_EQ(p.predicate(1).label, AbstractLabel::LA);
  EXPECT_FALSE(p.predicate(0).label.has_value());
  EXPECT_THROW(apply_labels(p, json::parse(R"({"v": 1, "labels": {"nope": "LA"}})")), Error);
}

TEST(PackJson, VersionAndRoleChecked) {
  EXPECT_THROW(pack_from_json(json::parse(R"({"v": 2, "variables": []})")), Error);
  EXPECT_THROW(pack_from_json(json::parse(
                   R"({"v": 1, "variables": [{"name": "a", "role": "state", "bounds": [0, 1]}]})")),
               Error);
}

TEST(ShippedPacks, LoadAndBind) {
  for (const char* name : {"idp", "cpu"}) {
    std::string base = repo(std::string("packs/") + name);
    auto pack = load_pack(base + ".json", base + "_labels.json");
    auto model = load_model(base + "_model.json", pack.space());
    EXPECT_GT(pack.predicates().size(), 20u) << name;
    std::size_t ma = 0, la = 0;
    for (const auto& p : pack.predicates()) {
      if (p.label == AbstractLabel::MA) ++ma;
      if (p.label == AbstractLabel::LA) ++la;
    }
    EXPECT_GT(ma, 0u);
    EXPECT_GT(la, 0u);
    // the model's image of the bounding box stays inside the declared output bounds
    auto out = model.box_image(pack.space().input_bounding());
    for (std::size_t k = 0; k < out.dim(); ++k) {
      const auto& b = pack.space().var(out.var(k)).bounds;
      EXPECT_GE(out.axis(k).lo, b.lo - 1e-9) << name;
      EXPECT_LE(out.axis(k).hi, b.hi + 1e-9) << name;
    }
  }
}

TEST(ModelJson, StandardizeIsAPreLayer) {
  Space s({{"a", Role::Input, {10, 20}}, {"o", Role::Output, {-10, 10}}});
  json j = json::parse(R"({"v": 1, "kind": "network",
      "standardize": {"mean": [15], "std": [5]},
      "layers": [{"weights": [[2]], "bias": [1], "activation": "identity"}]})");
  auto m = model_from_json(j, s);
  EXPECT_DOUBLE_EQ(m.system().evaluate({20.0})[0], 3.0);
  EXPECT_DOUBLE_EQ(m.system().evaluate({10.0})[0], -1.0);
  j["standardize"]["std"] = {0};
  EXPECT_THROW(model_from_json(j, s), Error);
}

TEST(DescriptionJson, RoundTrip) {
  auto pack = identity_pack();
  auto model = identity_model(*pack);
  ReachOptions ro;
  ro.epsilon = 0.125;
  Question q{QuestionType::WhenDoYou, Strength::Strict, {{"out_high"}}};
  auto rs = build_reachset(q, *pack, *model, ro, 3);
  Rng rng(4);
  auto d = generate_description(rs.illuminated(illuminated_side(q.type)), *pack, {}, rng);
  auto j = description_to_json(d, *pack);
  auto back = description_from_json(j, *pack);
  ASSERT_EQ(back.items.size(), d.items.size());
  for (std::size_t i = 0; i < d.items.size(); ++i) {
    EXPECT_EQ(back.items[i].condition, d.items[i].condition);
    EXPECT_EQ(back.items[i].unique_volume, d.items[i].unique_volume);
    EXPECT_EQ(back.items[i].total_volume, d.items[i].total_volume);
  }
  EXPECT_EQ(render_description(back, *pack), render_description(d, *pack));
}

TEST(ReachJson, DumpRoundTrip) {
  auto pack = identity_pack();
  auto model = identity_model(*pack);
  ReachOptions ro;
  ro.epsilon = 0.25;
  auto rs = build_reachset({QuestionType::WhenDoYou, Strength::Strict, {{"out_high"}}}, *pack, *model, ro, 3);
  auto dump = reach_dump_from_json(json::parse(reach_to_json(rs, *pack).dump()));
  ASSERT_EQ(dump.inputs.size(), rs.pairs.size());
  for (std::size_t i = 0; i < rs.pairs.size(); ++i) EXPECT_EQ(dump.inputs[i], rs.pairs[i].input);
}

TEST(Csv, ParsesAndReportsLines) {
  std::istringstream ok("a, b,\"c\"\n1,2,3\n\n4.5,-1e-3,0\n");
  auto t = read_csv(ok);
  EXPECT_EQ(t.header, (std::vector<std::string>{"a", "b", "c"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_DOUBLE_EQ(t.rows[1][1], -1e-3);
  auto d = select_columns(t, {"c", "a"}, {"b"});
  EXPECT_EQ(d.x[1], (std::vector<double>{0, 4.5}));
  EXPECT_THROW(t.column("z"), Error);

  std::istringstream ragged("a,b\n1\n");
  try {
    read_csv(ragged, "f.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("f.csv:2"), std::string::npos);
  }
  std::istringstream nan("a\nfoo\n");
  EXPECT_THROW(read_csv(nan), Error);
  std::istringstream empty("");
  EXPECT_THROW(read_csv(empty), Error);
}
