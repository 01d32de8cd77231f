#include "abacx/meta.hpp"

#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"

namespace abacx {
namespace {

TEST(Changeability, Bounds) {
  EXPECT_DOUBLE_EQ(changeability(20.0, 20.0, 80.0), 100.0);
  EXPECT_DOUBLE_EQ(changeability(80.0, 20.0, 80.0), 0.0);
  EXPECT_NEAR(changeability(70.0, 20.0, 80.0), 16.67, 0.01);
}

TEST(Changeability, RejectsDegenerateInputs) {
  EXPECT_THROW(changeability(10.0, 20.0, 80.0), std::invalid_argument);
  EXPECT_THROW(changeability(90.0, 20.0, 80.0), std::invalid_argument);
  EXPECT_THROW(changeability(50.0, 50.0, 50.0), std::invalid_argument);
}

TEST(Changeability, StrictlyDecreasingInCost) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> pick(0.0, 100.0);
  for (int i = 0; i < 1000; ++i) {
    double a = pick(rng), b = pick(rng);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    EXPECT_GT(changeability(a, 0.0, 100.0), changeability(b, 0.0, 100.0));
  }
}

TEST(DefaultCost, CategoryRanges) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 500; ++i) {
    const double env = default_cost(AttributeCategory::Environment, rng);
    EXPECT_GE(env, 0.0);
    EXPECT_LE(env, 40.0);
    const double user = default_cost(AttributeCategory::User, rng);
    EXPECT_GE(user, 50.0);
    EXPECT_LE(user, 90.0);
    const double object = default_cost(AttributeCategory::Object, rng);
    EXPECT_GE(object, 80.0);
    EXPECT_LE(object, 100.0);
  }
  EXPECT_THROW(default_cost(AttributeCategory::Operation, rng),
               std::invalid_argument);
}

TEST(Visibility, DefaultsToVisible) {
  MetaPolicy meta;
  EXPECT_TRUE(meta.visible("clearance", "alice"));
  meta.set_visibility("clearance", std::nullopt, "alice", false);
  EXPECT_FALSE(meta.visible("clearance", "alice"));
  EXPECT_TRUE(meta.visible("clearance", "bob"));
  EXPECT_TRUE(meta.visible("department", "alice"));
}

TEST(Visibility, ValueLevelEntriesTakePrecedence) {
  MetaPolicy meta;
  meta.set_visibility("clearance", "medium", std::string(kAnyActor), false);
  meta.set_visibility("clearance", "high", std::string(kAnyActor), false);
  meta.set_visibility("department", "Finance", std::string(kAnyActor), false);

  EXPECT_FALSE(meta.visible("clearance", "medium", "anyone"));
  EXPECT_FALSE(meta.visible("clearance", "high", "anyone"));
  EXPECT_FALSE(meta.visible("department", "Finance", "anyone"));
  EXPECT_TRUE(meta.visible("clearance", "low", "anyone"));
  EXPECT_TRUE(meta.visible("department", "HR", "anyone"));
  EXPECT_TRUE(meta.visible("clearance", "anyone"));

  // A value entry can also re-open an attribute hidden as a whole.
  meta.set_visibility("role", std::nullopt, "carol", false);
  meta.set_visibility("role", "admin", "carol", true);
  EXPECT_TRUE(meta.visible("role", "admin", "carol"));
  EXPECT_FALSE(meta.visible("role", "intern", "carol"));
}

TEST(ChangeCost, ScalarAndTransitions) {
  const MetaPolicy meta = test::example_meta();
  EXPECT_DOUBLE_EQ(meta.change_cost("clearance", "medium", "low"), 70.0);
  EXPECT_DOUBLE_EQ(meta.change_cost("department", "HR", "Finance"), 50.0);
  EXPECT_DOUBLE_EQ(meta.change_cost("role", "admin", "admin"), 0.0);

  MetaPolicy refined = meta;
  refined.set_transition_cost("clearance", "medium", "low", 12.0);
  EXPECT_DOUBLE_EQ(refined.change_cost("clearance", "medium", "low"), 12.0);
  EXPECT_DOUBLE_EQ(refined.change_cost("clearance", "low", "medium"), 70.0);

  EXPECT_THROW(meta.change_cost("unknown_attr", "x", "y"), ValidationError);
  EXPECT_THROW(refined.set_transition_cost("clearance", "low", "low", 3.0),
               ValidationError);
}

TEST(ChangeCost, NonnegativeAndZeroOnIdentity) {
  std::mt19937_64 rng(13);
  const Policy policy = test::random_small_policy(rng, 4, 3, 4);
  const MetaPolicy meta = test::random_integer_meta(policy, rng);
  for (const auto& attr : policy.schema()) {
    for (const auto& from : attr.domain) {
      EXPECT_DOUBLE_EQ(meta.change_cost(attr.name, from, from), 0.0);
      for (const auto& to : attr.domain)
        EXPECT_GE(meta.change_cost(attr.name, from, to), 0.0);
    }
  }
}

TEST(ChangeCost, CostOrderingPreservedByChangeability) {
  const MetaPolicy meta = test::example_meta();
  // cost(training_over) < cost(department) < cost(clearance) < cost(role)
  EXPECT_GT(meta.changeability_of("training_over"),
            meta.changeability_of("department"));
  EXPECT_GT(meta.changeability_of("department"),
            meta.changeability_of("clearance"));
  EXPECT_GT(meta.changeability_of("clearance"), meta.changeability_of("role"));
}

TEST(MetaParse, RoundTrip) {
  MetaPolicy meta = test::example_meta();
  meta.set_transition_cost("clearance", "high", "low", 95.0);
  meta.set_visibility("clearance", "medium", std::string(kAnyActor), false);
  meta.set_visibility("department", std::nullopt, "alice", false);

  const MetaPolicy reparsed = parse_meta(serialize(meta));
  EXPECT_DOUBLE_EQ(reparsed.cost_min(), meta.cost_min());
  EXPECT_DOUBLE_EQ(reparsed.cost_max(), meta.cost_max());
  EXPECT_EQ(reparsed.attribute_costs(), meta.attribute_costs());
  EXPECT_EQ(reparsed.transitions(), meta.transitions());
  EXPECT_EQ(reparsed.visibility_entries(), meta.visibility_entries());
}

TEST(MetaParse, FractionalVisibilityRejected) {
  const char* doc = R"({
    "bounds": {"min": 0, "max": 100},
    "costs": {"role": 80},
    "visibility": [{"attr": "role", "actor": "*", "visible": 0.5}]
  })";
  try {
    parse_meta(doc);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("0 or 1"), std::string::npos);
  }
}

TEST(MetaParse, CostOutsideBoundsRejected) {
  EXPECT_THROW(parse_meta(R"({
    "bounds": {"min": 0, "max": 50},
    "costs": {"role": 80}
  })"),
               ValidationError);
}

}  // namespace
}  // namespace abacx
