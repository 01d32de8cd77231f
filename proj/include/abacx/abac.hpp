#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace abacx {

// Reserved value tokens. Neither may appear inside an attribute domain.
inline constexpr std::string_view kWildcard = "*";   // matches any value, including "#"
inline constexpr std::string_view kUndefined = "#";  // an attribute that is not assigned

// Interned value codes. Domain values map to their index in the declared
// domain (which also defines the ordering used by relational predicates).
inline constexpr std::int32_t kUndefCode = -1;       // "#"
inline constexpr std::int32_t kWildcardCode = -2;    // "*"
inline constexpr std::int32_t kNoPredicateCode = -3; // rule does not constrain the attribute
inline constexpr std::int32_t kUnknownCode = -4;     // token not found

enum class AttributeCategory { User, Object, Environment, Operation };

std::string_view to_string(AttributeCategory category);
std::optional<AttributeCategory> category_from_string(std::string_view text);

enum class Relation { Eq, Ne, Lt, Gt, Le, Ge };

std::string_view to_string(Relation relation);
std::optional<Relation> relation_from_string(std::string_view text);

struct AttributeSchema {
  std::string name;
  AttributeCategory category = AttributeCategory::User;
  bool ordered = false;  // relational predicates require an ordered domain
  std::vector<std::string> domain;

  bool operator==(const AttributeSchema&) const = default;
};

struct Predicate {
  std::string attribute;
  Relation relation = Relation::Eq;
  std::string value;  // domain token, "*" or "#"

  bool operator==(const Predicate&) const = default;
};

// A rule is a conjunction: at most one predicate per attribute, plus one
// operation token ("*" matches any requested operation).
struct Rule {
  int id = 0;
  std::map<std::string, Predicate> predicates;
  std::string operation;

  bool operator==(const Rule&) const = default;
};

// An attribute absent from `assignments` reads as "#"; assigning "#"
// explicitly is equivalent.
struct Request {
  std::map<std::string, std::string> assignments;
  std::string operation;

  bool operator==(const Request&) const = default;
  const std::string& value_of(const std::string& attribute) const;
};

struct Decision {
  bool allowed = false;
  std::set<std::string> granted_operations;  // empty iff denied
  std::set<int> matched_rule_ids;
};

// Thrown for malformed documents and schema violations. `location` names the
// offending field ("rules[2].predicates.role") when known.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string location, const std::string& message)
      : std::runtime_error(location.empty() ? message
                                            : location + ": " + message),
        location_(std::move(location)) {}

  const std::string& location() const { return location_; }

 private:
  std::string location_;
};

// A request resolved against a policy's interned schema: one value code per
// attribute (kUndefCode when unassigned) plus the operation code.
struct CompiledRequest {
  std::vector<std::int32_t> values;
  std::int32_t operation = kUnknownCode;
};

struct PredCode {
  Relation relation = Relation::Eq;
  std::int32_t value = kNoPredicateCode;
};

// Immutable after construction; the constructor validates every invariant
// (distinct domains, reserved-token use, rule ids, predicate well-formedness)
// and interns attributes, values and operations for fast evaluation.
class Policy {
 public:
  Policy() = default;
  Policy(std::vector<AttributeSchema> schema, std::vector<Rule> rules,
         std::vector<std::string> operations);

  const std::vector<AttributeSchema>& schema() const { return schema_; }
  const std::vector<Rule>& rules() const { return rules_; }
  const std::vector<std::string>& operations() const { return operations_; }

  int attribute_count() const { return static_cast<int>(schema_.size()); }
  int attribute_index(std::string_view name) const;  // -1 when unknown
  const AttributeSchema& attribute(int index) const { return schema_.at(index); }

  // Attributes the tree may split on (every category except Operation).
  const std::vector<int>& splittable_attributes() const { return splittable_; }

  std::int32_t value_code(int attribute_index, std::string_view token) const;
  const std::string& value_token(int attribute_index, std::int32_t code) const;

  std::int32_t operation_code(std::string_view token) const;
  const std::string& operation_token(std::int32_t code) const;

  std::size_t rule_count() const { return rules_.size(); }
  int rule_position(int rule_id) const;  // -1 when unknown
  PredCode rule_predicate(std::size_t rule_pos, int attribute_index) const;
  std::int32_t rule_operation_code(std::size_t rule_pos) const;
  bool has_relational_predicates() const { return has_relational_; }

  // Validates the request against the schema and interns it.
  CompiledRequest compile(const Request& request) const;
  bool matches(std::size_t rule_pos, const CompiledRequest& request) const;

  bool operator==(const Policy& other) const;

 private:
  void validate_and_index();

  std::vector<AttributeSchema> schema_;
  std::vector<Rule> rules_;
  std::vector<std::string> operations_;

  std::map<std::string, int, std::less<>> attr_index_;
  std::vector<std::map<std::string, std::int32_t, std::less<>>> value_index_;
  std::map<std::string, std::int32_t, std::less<>> op_index_;
  std::vector<int> splittable_;
  std::map<int, int> rule_pos_;

  // Dense predicate matrix [rule * attribute_count + attribute]; explicit "*"
  // predicates compile to kNoPredicateCode (they never bind).
  std::vector<PredCode> pred_matrix_;
  // Per rule, only the binding predicates, for early-exit matching.
  std::vector<std::vector<std::pair<std::int32_t, PredCode>>> bound_preds_;
  std::vector<std::int32_t> rule_op_codes_;
  bool has_relational_ = false;
};

// Parses the JSON policy document format; throws ValidationError with a
// field location on malformed input.
Policy parse_policy(const std::string& text);
std::string serialize(const Policy& policy);

Request parse_request(const std::string& text);
std::string serialize(const Request& request);

// True iff every predicate of `rule` is satisfied by `request` and the
// operations agree ("*" in the rule matches any). Total over valid inputs.
bool rule_matches(const Policy& policy, const Rule& rule, const Request& request);

// Linear scan over all rules; the correctness reference for tree evaluation.
Decision oracle_decide(const Policy& policy, const Request& request);
Decision oracle_decide(const Policy& policy, const CompiledRequest& request);

}  // namespace abacx
