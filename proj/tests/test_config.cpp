#include <gtest/gtest.h>

#include "illum/config.hpp"

using namespace illum;

TEST(Config, TomlOverridesDefaults) {
  AppConfig c;
  auto defaults = c;
  apply_config(c, parse_config_text(R"(
seed = 42
[reach]
max_boxes = 1500
breadth_first = true
merge_theta = 1e-6
[session]
epsilon = 0.2
[smt]
command = "z3 -in -smt2"
timeout_ms = 500
[service]
port = 9001
)",
                                    true));
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.reach.analysis.max_boxes, 1500u);
  EXPECT_TRUE(c.reach.analysis.breadth_first);
  EXPECT_DOUBLE_EQ(c.reach.merge_params.theta, 1e-6);
  EXPECT_DOUBLE_EQ(c.initial.epsilon, 0.2);
  ASSERT_TRUE(c.smt.has_value());
  EXPECT_EQ(c.smt->command, "z3 -in -smt2");
  EXPECT_EQ(c.smt->timeout_ms, 500);
  EXPECT_EQ(c.port, 9001);
  // untouched keys keep their defaults
  EXPECT_EQ(c.reach.analysis.n_sample, defaults.reach.analysis.n_sample);
  EXPECT_EQ(c.description.n_shell, defaults.description.n_shell);
}

TEST(Config, JsonAndTomlAgree) {
  AppConfig a, b;
  apply_config(a, parse_config_text(R"({"seed": 7, "reach": {"force_k2": true}, "session": {"alpha": 0.5}})", false));
  apply_config(b, parse_config_text("seed = 7\n[reach]\nforce_k2 = true\n[session]\nalpha = 0.5\n", true));
  EXPECT_EQ(a.seed, b.seed);
  EXPECT_EQ(a.reach.analysis.force_k2, b.reach.analysis.force_k2);
  EXPECT_DOUBLE_EQ(a.initial.alpha, b.initial.alpha);
  EXPECT_EQ(a.session_config().seed, 7u);
}

TEST(Config, RejectsUnknownAndOutOfRange) {
  AppConfig c;
  EXPECT_THROW(apply_config(c, json::parse(R"({"reach": {"max_box": 3}})")), Error);
  EXPECT_THROW(apply_config(c, json::parse(R"({"colour": 1})")), Error);
  EXPECT_THROW(apply_config(c, json::parse(R"({"session": {"epsilon": 0}})")), Error);
  EXPECT_THROW(apply_config(c, json::parse(R"({"session": {"epsilon": 1.5}})")), Error);
  EXPECT_THROW(apply_config(c, json::parse(R"({"reach": {"max_boxes": "many"}})")), std::exception);
  EXPECT_THROW(parse_config_text("[reach\n", true), Error);
  EXPECT_THROW(parse_config_text("{", false), Error);
}

TEST(Config, EmptySmtCommandDisablesSolver) {
  AppConfig c;
  apply_config(c, json::parse(R"({"smt": {"command": "z3 -in"}})"));
  ASSERT_TRUE(c.smt);
  apply_config(c, json::parse(R"({"smt": {"command": ""}})"));
  EXPECT_FALSE(c.smt);
}
