#include "abacx/eval.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include <json.hpp>

#include "abacx/datagen.hpp"
#include "test_support.hpp"

namespace abacx {
namespace {

PolicyTree example_tree() {
  std::mt19937_64 rng(1);
  return build_tree(test::example_policy(), SplitHeuristic::HighCostFirst,
                    test::example_meta(), rng);
}

TEST(Evaluate, DeniedExampleRequest) {
  const PolicyTree tree = example_tree();
  const auto outcome = evaluate(tree, test::denied_request());

  EXPECT_FALSE(outcome.decision.allowed);
  ASSERT_TRUE(outcome.deny_node.has_value());

  // The trace dead-ends after the role=manager edge, at the clearance test.
  const auto& deny = tree.node(*outcome.deny_node);
  ASSERT_FALSE(deny.is_leaf());
  EXPECT_EQ(tree.policy().attribute(deny.attribute).name, "clearance");
  ASSERT_GE(deny.parent, 0);
  EXPECT_EQ(static_cast<std::uint32_t>(deny.parent), tree.root());
  EXPECT_EQ(outcome.visited_path.front(), tree.root());
}

TEST(Evaluate, AdminAllowedThroughItsRule) {
  const PolicyTree tree = example_tree();
  Request request;
  request.assignments["role"] = "admin";
  request.operation = "access";
  const auto outcome = evaluate(tree, request);
  EXPECT_TRUE(outcome.decision.allowed);
  EXPECT_EQ(outcome.decision.matched_rule_ids, std::set<int>{1});
  EXPECT_EQ(outcome.decision.granted_operations, std::set<std::string>{"access"});
  EXPECT_FALSE(outcome.deny_node.has_value());
}

TEST(Evaluate, NoMatchingRootEdgeDeniesAtRoot) {
  const PolicyTree tree = example_tree();
  Request request;  // role unassigned; the root has no "#" or wildcard edge
  request.operation = "access";
  const auto outcome = evaluate(tree, request);
  EXPECT_FALSE(outcome.decision.allowed);
  EXPECT_EQ(outcome.visited_path, std::vector<std::uint32_t>{tree.root()});
  EXPECT_EQ(*outcome.deny_node, tree.root());
  EXPECT_EQ(outcome.retrace_count, 0);
}

TEST(Evaluate, OperationMismatchAtLeafDenies) {
  // Same shape as the example policy but single rule granting only "read".
  const Policy policy(
      {{"role", AttributeCategory::User, false, {"admin", "user"}}},
      {{1, {{"role", Predicate{"role", Relation::Eq, "admin"}}}, "read"}},
      {"read", "write"});
  std::mt19937_64 rng(1);
  MetaPolicy meta;
  meta.set_attribute_cost("role", 10.0);
  const PolicyTree tree = build_tree(policy, SplitHeuristic::HighCostFirst,
                                     meta, rng);
  Request request;
  request.assignments["role"] = "admin";
  request.operation = "write";
  const auto outcome = evaluate(tree, request);
  EXPECT_FALSE(outcome.decision.allowed);
}

TEST(LocateDenyNode, ExampleAndRootCases) {
  const PolicyTree tree = example_tree();
  const auto deny_id = locate_deny_node(tree, test::denied_request());
  const auto& deny = tree.node(deny_id);
  EXPECT_EQ(tree.policy().attribute(deny.attribute).name, "clearance");

  Request unassigned;
  unassigned.operation = "access";
  EXPECT_EQ(locate_deny_node(tree, unassigned), tree.root());

  Request allowed;
  allowed.assignments["role"] = "admin";
  allowed.operation = "access";
  EXPECT_THROW(locate_deny_node(tree, allowed), std::invalid_argument);
}

TEST(LocateDenyNode, InternBranchDeniesAtItsClearanceTest) {
  const PolicyTree tree = example_tree();
  Request request;
  request.assignments = {{"role", "intern"},
                         {"department", "General"},
                         {"clearance", "low"},
                         {"training_over", "no"}};
  request.operation = "access";
  const auto deny_id = locate_deny_node(tree, request);
  const auto& deny = tree.node(deny_id);
  ASSERT_FALSE(deny.is_leaf());
  EXPECT_EQ(tree.policy().attribute(deny.attribute).name, "clearance");
  // Reached through the intern edge, not the manager edge.
  const auto& root = tree.node(tree.root());
  const auto intern_code = tree.policy().value_code(root.attribute, "intern");
  bool under_intern = false;
  for (const auto& edge : root.edges)
    if (edge.value == intern_code && edge.child == deny_id) under_intern = true;
  EXPECT_TRUE(under_intern);
}

TEST(Evaluate, WildcardRetracingRecoversGeneralRules) {
  // specific: role=admin & clearance=high; general: role=admin (any clearance).
  const auto eq = [](const std::string& attr, const std::string& value) {
    return Predicate{attr, Relation::Eq, value};
  };
  const Policy policy(
      {{"role", AttributeCategory::User, false, {"admin", "user"}},
       {"clearance", AttributeCategory::User, false, {"low", "high"}}},
      {{1, {{"role", eq("role", "admin")}, {"clearance", eq("clearance", "high")}},
        "read"},
       {2, {{"role", eq("role", "admin")}}, "write"}},
      {"read", "write"});
  MetaPolicy meta;
  meta.set_attribute_cost("role", 10.0);
  meta.set_attribute_cost("clearance", 20.0);
  std::mt19937_64 rng(1);
  const PolicyTree tree = build_tree(policy, SplitHeuristic::HighCostFirst,
                                     meta, rng);

  // clearance=high matches the exact edge but rule 1 grants only "read";
  // the wildcard edge must be retraced to reach rule 2.
  Request request;
  request.assignments = {{"role", "admin"}, {"clearance", "high"}};
  request.operation = "write";
  const auto outcome = evaluate(tree, request);
  EXPECT_TRUE(outcome.decision.allowed);
  EXPECT_EQ(outcome.decision.matched_rule_ids, std::set<int>{2});
  EXPECT_GE(outcome.retrace_count, 1);
}

TEST(Properties, TreeOutcomeMatchesOracleOnRandomInstances) {
  std::mt19937_64 rng(606);
  for (int round = 0; round < 40; ++round) {
    const Policy policy = test::random_small_policy(rng, 5, 3, 8);
    const MetaPolicy meta = test::random_integer_meta(policy, rng);
    for (auto heuristic : kAllHeuristics) {
      const PolicyTree tree = build_tree(policy, heuristic, meta, rng);
      for (int i = 0; i < 50; ++i) {
        const Request request = test::random_small_request(policy, rng);
        EXPECT_EQ(evaluate(tree, request).decision.allowed,
                  oracle_decide(policy, request).allowed);
      }
    }
  }
}

TEST(Properties, DenyNodeLiesOnASatisfiedPath) {
  std::mt19937_64 rng(707);
  int checked = 0;
  while (checked < 300) {
    const Policy policy = test::random_small_policy(rng, 5, 3, 8);
    const MetaPolicy meta = test::random_integer_meta(policy, rng);
    const PolicyTree tree =
        build_tree(policy, kAllHeuristics[checked % 5], meta, rng);
    const Request request = test::random_small_request(policy, rng);
    const auto outcome = evaluate(tree, request);
    if (outcome.decision.allowed) continue;
    ++checked;

    ASSERT_TRUE(outcome.deny_node.has_value());
    EXPECT_NE(std::find(outcome.visited_path.begin(), outcome.visited_path.end(),
                        *outcome.deny_node),
              outcome.visited_path.end());

    // Walk up from the deny node: each edge crossed must be the wildcard or
    // match the request's value.
    const auto creq = policy.compile(request);
    std::uint32_t current = *outcome.deny_node;
    while (tree.node(current).parent >= 0) {
      const auto& parent = tree.node(tree.node(current).parent);
      bool satisfied = parent.wildcard_child >= 0 &&
                       static_cast<std::uint32_t>(parent.wildcard_child) == current;
      for (const auto& edge : parent.edges) {
        if (edge.child != current) continue;
        satisfied = edge.value == creq.values[parent.attribute];
      }
      EXPECT_TRUE(satisfied);
      current = parent.id;
    }
    EXPECT_EQ(current, tree.root());
  }
}

TEST(Properties, RetraceCountBoundedByWildcardEdgesOnPath) {
  std::mt19937_64 rng(808);
  for (int round = 0; round < 300; ++round) {
    const Policy policy = test::random_small_policy(rng, 5, 3, 8);
    const MetaPolicy meta = test::random_integer_meta(policy, rng);
    const PolicyTree tree =
        build_tree(policy, kAllHeuristics[round % 5], meta, rng);
    const Request request = test::random_small_request(policy, rng);
    const auto outcome = evaluate(tree, request);

    int wildcard_edges = 0;
    for (const auto id : outcome.visited_path)
      if (!tree.node(id).is_leaf() && tree.node(id).wildcard_child >= 0)
        ++wildcard_edges;
    EXPECT_LE(outcome.retrace_count, wildcard_edges);
    EXPECT_LE(outcome.visited_path.size(),
              static_cast<std::size_t>(
                  (tree.attribute_count() + 1) *
                  (outcome.retrace_count + 1)));
  }
}

// Removing every wildcard edge can only turn allow into deny.
TEST(Properties, RetracingSoundness) {
  std::mt19937_64 rng(909);
  for (int round = 0; round < 30; ++round) {
    const Policy policy = test::random_small_policy(rng, 4, 3, 6);
    const MetaPolicy meta = test::random_integer_meta(policy, rng);
    const PolicyTree tree =
        build_tree(policy, kAllHeuristics[round % 5], meta, rng);

    auto doc = nlohmann::json::parse(dump_tree(tree));
    for (auto& node : doc["nodes"]) node.erase("wildcard");
    const PolicyTree stripped = load_tree(doc.dump(), tree.policy_ptr());

    for (const auto& request : test::all_requests(policy)) {
      const bool full = evaluate(tree, request).decision.allowed;
      const bool bare = evaluate(stripped, request).decision.allowed;
      if (bare) EXPECT_TRUE(full);
    }
  }
}

}  // namespace
}  // namespace abacx
