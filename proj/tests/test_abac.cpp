#include "abacx/abac.hpp"

#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"

namespace abacx {
namespace {

const char* kExampleDocument = R"({
  "schema": [
    {"name": "role", "category": "user", "ordered": false,
     "domain": ["admin", "intern", "manager"]},
    {"name": "department", "category": "user", "ordered": false,
     "domain": ["HR", "Finance", "General"]},
    {"name": "clearance", "category": "user", "ordered": false,
     "domain": ["low", "medium", "high"]},
    {"name": "training_over", "category": "user", "ordered": false,
     "domain": ["yes", "no"]}
  ],
  "operations": ["access"],
  "rules": [
    {"id": 1, "predicates": {"role": {"rel": "=", "value": "admin"},
                             "department": {"rel": "=", "value": "*"}},
     "op": "access"},
    {"id": 2, "predicates": {"role": {"rel": "=", "value": "intern"},
                             "clearance": {"rel": "=", "value": "medium"}},
     "op": "access"},
    {"id": 3, "predicates": {"role": {"rel": "=", "value": "manager"},
                             "clearance": {"rel": "=", "value": "low"},
                             "department": {"rel": "=", "value": "HR"}},
     "op": "access"}
  ]
})";

TEST(ParsePolicy, ExampleDocument) {
  const Policy policy = parse_policy(kExampleDocument);
  EXPECT_EQ(policy.rule_count(), 3u);
  EXPECT_EQ(policy.attribute_count(), 4);
  EXPECT_GE(policy.attribute_index("role"), 0);
  EXPECT_GE(policy.attribute_index("department"), 0);
  EXPECT_GE(policy.attribute_index("clearance"), 0);
  EXPECT_GE(policy.attribute_index("training_over"), 0);
  EXPECT_EQ(policy.operations(), std::vector<std::string>{"access"});
}

TEST(ParsePolicy, EmptyRuleListDeniesEverything) {
  const Policy policy = parse_policy(R"({
    "schema": [{"name": "role", "category": "user", "domain": ["admin"]}],
    "operations": ["read"],
    "rules": []
  })");
  EXPECT_EQ(policy.rule_count(), 0u);
  Request request;
  request.assignments["role"] = "admin";
  request.operation = "read";
  EXPECT_FALSE(oracle_decide(policy, request).allowed);
}

TEST(ParsePolicy, ValueOutsideDomainIsRejected) {
  const char* doc = R"({
    "schema": [{"name": "role", "category": "user", "domain": ["admin"]}],
    "operations": ["read"],
    "rules": [{"id": 1, "predicates": {"role": {"rel": "=", "value": "superadmin"}},
               "op": "read"}]
  })";
  try {
    parse_policy(doc);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("outside domain"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("rules[0]"), std::string::npos);
  }
}

TEST(ParsePolicy, MalformedJsonReportsLocation) {
  EXPECT_THROW(parse_policy("{ not json"), ValidationError);
  EXPECT_THROW(parse_policy(R"({"schema": [], "rules": []})"), ValidationError);
}

TEST(ParsePolicy, ReservedTokensInsideDomainRejected) {
  EXPECT_THROW(parse_policy(R"({
    "schema": [{"name": "role", "category": "user", "domain": ["admin", "*"]}],
    "operations": ["read"], "rules": []
  })"),
               ValidationError);
}

TEST(ParsePolicy, DuplicateRuleIdRejected) {
  EXPECT_THROW(parse_policy(R"({
    "schema": [{"name": "role", "category": "user", "domain": ["admin"]}],
    "operations": ["read"],
    "rules": [{"id": 7, "predicates": {}, "op": "read"},
              {"id": 7, "predicates": {}, "op": "read"}]
  })"),
               ValidationError);
}

TEST(ParsePolicy, RelationalPredicateNeedsOrderedDomain) {
  EXPECT_THROW(parse_policy(R"({
    "schema": [{"name": "clearance", "category": "user", "ordered": false,
                "domain": ["low", "high"]}],
    "operations": ["read"],
    "rules": [{"id": 1, "predicates": {"clearance": {"rel": "<", "value": "high"}},
               "op": "read"}]
  })"),
               ValidationError);
}

TEST(ParsePolicy, WildcardValueOnlyCombinesWithEquality) {
  EXPECT_THROW(parse_policy(R"({
    "schema": [{"name": "clearance", "category": "user", "ordered": true,
                "domain": ["low", "high"]}],
    "operations": ["read"],
    "rules": [{"id": 1, "predicates": {"clearance": {"rel": "<", "value": "*"}},
               "op": "read"}]
  })"),
               ValidationError);
}

TEST(RuleMatches, ExampleRules) {
  const Policy policy = test::example_policy();
  Request admin_request;
  admin_request.assignments["role"] = "admin";
  admin_request.operation = "access";
  EXPECT_TRUE(rule_matches(policy, policy.rules()[0], admin_request));

  const Request denied = test::denied_request();
  EXPECT_FALSE(rule_matches(policy, policy.rules()[2], denied));
}

TEST(RuleMatches, UniversalRuleMatchesAnyRequestWithItsOperation) {
  const Policy policy = test::example_policy();
  Rule universal;
  universal.id = 99;
  universal.operation = "access";
  for (const auto& attr : policy.schema())
    universal.predicates.emplace(
        attr.name, Predicate{attr.name, Relation::Eq, std::string(kWildcard)});

  Request empty;
  empty.operation = "access";
  EXPECT_TRUE(rule_matches(policy, universal, empty));
  EXPECT_TRUE(rule_matches(policy, universal, test::denied_request()));
}

TEST(RuleMatches, UndefinedPredicateMatchesOnlyUnassigned) {
  const Policy policy = test::example_policy();
  Rule rule;
  rule.id = 50;
  rule.operation = "access";
  rule.predicates.emplace(
      "training_over",
      Predicate{"training_over", Relation::Eq, std::string(kUndefined)});

  Request unassigned;
  unassigned.operation = "access";
  EXPECT_TRUE(rule_matches(policy, rule, unassigned));

  // An explicit "#" assignment is the same as leaving the attribute out.
  Request explicit_undef;
  explicit_undef.operation = "access";
  explicit_undef.assignments["training_over"] = std::string(kUndefined);
  EXPECT_TRUE(rule_matches(policy, rule, explicit_undef));

  Request assigned;
  assigned.operation = "access";
  assigned.assignments["training_over"] = "yes";
  EXPECT_FALSE(rule_matches(policy, rule, assigned));
}

TEST(RuleMatches, OperationWildcardInRule) {
  const Policy policy = test::example_policy();
  Rule rule;
  rule.id = 60;
  rule.operation = std::string(kWildcard);
  Request request;
  request.operation = "access";
  EXPECT_TRUE(rule_matches(policy, rule, request));
}

TEST(OracleDecide, ExamplePolicy) {
  const Policy policy = test::example_policy();

  const auto denied = oracle_decide(policy, test::denied_request());
  EXPECT_FALSE(denied.allowed);
  EXPECT_TRUE(denied.matched_rule_ids.empty());
  EXPECT_TRUE(denied.granted_operations.empty());

  Request intern;
  intern.assignments = {{"role", "intern"}, {"clearance", "medium"}};
  intern.operation = "access";
  const auto allowed = oracle_decide(policy, intern);
  EXPECT_TRUE(allowed.allowed);
  EXPECT_EQ(allowed.matched_rule_ids, std::set<int>{2});
  EXPECT_EQ(allowed.granted_operations, std::set<std::string>{"access"});
}

TEST(OracleDecide, EmptyPolicyDeniesEverything) {
  const Policy policy({{"x", AttributeCategory::User, false, {"v"}}}, {},
                      {"read"});
  Request request;
  request.operation = "read";
  EXPECT_FALSE(oracle_decide(policy, request).allowed);
}

TEST(OracleDecide, RelationalPredicatesUseDomainOrder) {
  const Policy policy(
      {{"clearance", AttributeCategory::User, true, {"low", "medium", "high"}}},
      {{1,
        {{"clearance", Predicate{"clearance", Relation::Ge, "medium"}}},
        "read"}},
      {"read"});
  Request low, high;
  low.operation = high.operation = "read";
  low.assignments["clearance"] = "low";
  high.assignments["clearance"] = "high";
  EXPECT_FALSE(oracle_decide(policy, low).allowed);
  EXPECT_TRUE(oracle_decide(policy, high).allowed);
}

TEST(OracleDecide, RejectsRequestValueOutsideDomain) {
  const Policy policy = test::example_policy();
  Request request;
  request.assignments["role"] = "ceo";
  request.operation = "access";
  EXPECT_THROW(oracle_decide(policy, request), ValidationError);
}

// Decision outcome equals "some rule matches", checked exhaustively over
// every request the schema admits.
TEST(Properties, OracleAgreesWithExistentialMatch) {
  std::mt19937_64 rng(41);
  for (int round = 0; round < 25; ++round) {
    const Policy policy = test::random_small_policy(rng);
    for (const auto& request : test::all_requests(policy)) {
      bool any = false;
      for (const auto& rule : policy.rules())
        any = any || rule_matches(policy, rule, request);
      EXPECT_EQ(oracle_decide(policy, request).allowed, any);
    }
  }
}

// Replacing any predicate value by "*" never turns a true match false.
TEST(Properties, RuleMatchingIsMonotoneInWildcards) {
  std::mt19937_64 rng(42);
  int checked = 0;
  while (checked < 1000) {
    const Policy policy = test::random_small_policy(rng);
    if (policy.rule_count() == 0) continue;
    const Request request = test::random_small_request(policy, rng);
    const auto& rule = policy.rules()[rng() % policy.rule_count()];
    if (!rule_matches(policy, rule, request)) continue;
    for (const auto& [attr_name, pred] : rule.predicates) {
      Rule relaxed = rule;
      relaxed.predicates[attr_name].relation = Relation::Eq;
      relaxed.predicates[attr_name].value = std::string(kWildcard);
      EXPECT_TRUE(rule_matches(policy, relaxed, request))
          << "wildcarding '" << attr_name << "' broke a match";
    }
    ++checked;
  }
}

TEST(Properties, SerializationRoundTrip) {
  std::mt19937_64 rng(43);
  for (int round = 0; round < 50; ++round) {
    const Policy policy = test::random_small_policy(rng);
    const Policy reparsed = parse_policy(serialize(policy));
    EXPECT_TRUE(policy == reparsed);
  }
  const Policy example = test::example_policy();
  EXPECT_TRUE(example == parse_policy(serialize(example)));
}

TEST(Requests, ParseAndSerializeRoundTrip) {
  const Request request = test::denied_request();
  const Request reparsed = parse_request(serialize(request));
  EXPECT_TRUE(request == reparsed);
}

}  // namespace
}  // namespace abacx
