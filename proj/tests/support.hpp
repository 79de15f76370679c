#pragma once

// Shared generators and helpers for the test suite.

#include <cstdlib>
#include <filesystem>

#include "illum/decision.hpp"
#include "illum/domain.hpp"
#include "illum/models.hpp"

namespace illum::testing {

inline Box unit_box(std::vector<VarIndex> vars) {
  return Box(vars, std::vector<Interval>(vars.size(), Interval{0.0, 1.0}));
}

inline Box random_box(Rng& rng, std::size_t nvars, double lo = -2.0, double hi = 2.0) {
  std::vector<VarIndex> vars(nvars);
  std::vector<Interval> iv(nvars);
  for (std::size_t i = 0; i < nvars; ++i) {
    vars[i] = i;
    double a = uniform(rng, lo, hi), b = uniform(rng, lo, hi);
    iv[i] = {std::min(a, b), std::max(a, b)};
  }
  return Box(vars, iv);
}

inline Atom random_atom(Rng& rng, std::size_t nvars) {
  Atom a;
  for (std::size_t v = 0; v < nvars; ++v)
    if (uniform01(rng) < 0.6) a.terms.push_back({v, uniform(rng, -2.0, 2.0)});
  if (a.terms.empty()) a.terms.push_back({static_cast<VarIndex>(rng() % nvars), 1.0});
  a.constant = uniform(rng, -1.5, 1.5);
  a.rel = static_cast<Relation>(rng() % 5);
  if (a.rel == Relation::Eq && uniform01(rng) < 0.7) a.rel = Relation::Le;
  return a;
}

inline Formula random_formula(Rng& rng, std::size_t nvars, int depth = 3) {
  if (depth == 0 || uniform01(rng) < 0.3) return Formula::atom(random_atom(rng, nvars));
  int k = static_cast<int>(rng() % 3);
  std::size_t n = 1 + rng() % 3;
  std::vector<Formula> cs;
  for (std::size_t i = 0; i < n; ++i) cs.push_back(random_formula(rng, nvars, depth - 1));
  if (k == 0) return Formula::all_of(std::move(cs));
  if (k == 1) return Formula::any_of(std::move(cs));
  return Formula::negation(std::move(cs.front()));
}

/// Random DNF of affine atoms: 1-3 disjuncts of 1-3 atoms.
inline Formula random_dnf(Rng& rng, std::size_t nvars) {
  std::vector<Formula> ds;
  std::size_t nd = 1 + rng() % 3;
  for (std::size_t i = 0; i < nd; ++i) {
    std::vector<Formula> cs;
    std::size_t nc = 1 + rng() % 3;
    for (std::size_t j = 0; j < nc; ++j) cs.push_back(Formula::atom(random_atom(rng, nvars)));
    ds.push_back(Formula::all_of(std::move(cs)));
  }
  return Formula::any_of(std::move(ds));
}

inline Atom le(VarIndex v, double c) { return {{{v, 1.0}}, -c, Relation::Le}; }
inline Atom lt(VarIndex v, double c) { return {{{v, 1.0}}, -c, Relation::Lt}; }
inline Atom ge(VarIndex v, double c) { return {{{v, 1.0}}, -c, Relation::Ge}; }
inline Atom gt(VarIndex v, double c) { return {{{v, 1.0}}, -c, Relation::Gt}; }

/// SMT configuration for z3 when a binary is reachable; nullopt otherwise.
inline std::optional<SmtConfig> find_z3() {
  if (const char* env = std::getenv("ILLUM_SMT_COMMAND")) return SmtConfig{env, 20000};
  for (const char* dir : {"/usr/local/bin", "/usr/bin"}) {
    auto p = std::filesystem::path(dir) / "z3";
    if (std::filesystem::exists(p)) return SmtConfig{p.string() + " -in -smt2", 20000};
  }
  return std::nullopt;
}

inline FeedForwardNetwork random_network(Rng& rng, std::size_t in, std::size_t out, std::size_t max_layers = 3,
                                         std::size_t max_units = 8) {
  std::size_t nl = 1 + rng() % max_layers;
  std::vector<Layer> layers;
  std::size_t prev = in;
  for (std::size_t l = 0; l < nl; ++l) {
    std::size_t units = l + 1 == nl ? out : 1 + rng() % max_units;
    Layer L;
    L.weights.assign(units, std::vector<double>(prev));
    L.bias.resize(units);
    for (auto& row : L.weights)
      for (auto& w : row) w = uniform(rng, -1.5, 1.5);
    for (auto& b : L.bias) b = uniform(rng, -0.5, 0.5);
    L.activation = l + 1 == nl ? Activation::Identity : static_cast<Activation>(rng() % 4);
    layers.push_back(std::move(L));
    prev = units;
  }
  return FeedForwardNetwork(std::move(layers));
}

}  // namespace illum::testing

namespace illum::testing {

/// x in [0,1] -> y = x with a handful of thresholds on both sides.
inline std::shared_ptr<DomainPack> identity_pack() {
  auto p = std::make_shared<DomainPack>("identity", Space({{"x", Role::Input, {0, 1}}, {"y", Role::Output, {0, 1}}}));
  p->add_predicate("out_high", Formula::atom(ge(1, 0.75)), RoleTag::OutputSpace);
  p->add_predicate("out_low", Formula::atom(le(1, 0.3)), RoleTag::OutputSpace);
  p->add_predicate("x_ge_half", Formula::atom(ge(0, 0.5)), RoleTag::InputSpace, AbstractLabel::MA);
  p->add_predicate("x_ge_3q", Formula::atom(ge(0, 0.75)), RoleTag::InputSpace, AbstractLabel::LA);
  p->add_predicate("x_upper_band", Formula::in_range(0, {0.7, 1.0}), RoleTag::InputSpace, AbstractLabel::LA);
  p->add_predicate("x_top", Formula::atom(ge(0, 0.9)), RoleTag::InputSpace, AbstractLabel::LA);
  p->add_predicate("x_low", Formula::atom(le(0, 0.3)), RoleTag::InputSpace, AbstractLabel::LA);
  p->add_predicate("x_any", Formula::atom(ge(0, -1.0)), RoleTag::InputSpace, AbstractLabel::MA);
  return p;
}

inline std::shared_ptr<BoundModel> identity_model(const DomainPack& pack) {
  return std::make_shared<BoundModel>(BoundModel::by_role(
      std::make_shared<FeedForwardNetwork>(std::vector<Layer>{Layer{{{1.0}}, {0.0}, Activation::Identity}}),
      pack.space()));
}

}  // namespace illum::testing
