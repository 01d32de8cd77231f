#include "abacx/abac.hpp"

#include <algorithm>

#include "json_util.hpp"

namespace abacx {

namespace {

const std::string kUndefinedStr{kUndefined};
const std::string kWildcardStr{kWildcard};

bool is_reserved(std::string_view token) {
  return token == kWildcard || token == kUndefined;
}

}  // namespace

std::string_view to_string(AttributeCategory category) {
  switch (category) {
    case AttributeCategory::User: return "user";
    case AttributeCategory::Object: return "object";
    case AttributeCategory::Environment: return "environment";
    case AttributeCategory::Operation: return "operation";
  }
  return "user";
}

std::optional<AttributeCategory> category_from_string(std::string_view text) {
  if (text == "user") return AttributeCategory::User;
  if (text == "object") return AttributeCategory::Object;
  if (text == "environment") return AttributeCategory::Environment;
  if (text == "operation") return AttributeCategory::Operation;
  return std::nullopt;
}

std::string_view to_string(Relation relation) {
  switch (relation) {
    case Relation::Eq: return "=";
    case Relation::Ne: return "!=";
    case Relation::Lt: return "<";
    case Relation::Gt: return ">";
    case Relation::Le: return "<=";
    case Relation::Ge: return ">=";
  }
  return "=";
}

std::optional<Relation> relation_from_string(std::string_view text) {
  if (text == "=" || text == "==") return Relation::Eq;
  if (text == "!=") return Relation::Ne;
  if (text == "<") return Relation::Lt;
  if (text == ">") return Relation::Gt;
  if (text == "<=") return Relation::Le;
  if (text == ">=") return Relation::Ge;
  return std::nullopt;
}

const std::string& Request::value_of(const std::string& attribute) const {
  auto it = assignments.find(attribute);
  return it == assignments.end() ? kUndefinedStr : it->second;
}

Policy::Policy(std::vector<AttributeSchema> schema, std::vector<Rule> rules,
               std::vector<std::string> operations)
    : schema_(std::move(schema)),
      rules_(std::move(rules)),
      operations_(std::move(operations)) {
  validate_and_index();
}

void Policy::validate_and_index() {
  for (std::size_t i = 0; i < schema_.size(); ++i) {
    const auto& attr = schema_[i];
    const std::string where = "schema[" + std::to_string(i) + "]";
    if (attr.name.empty()) throw ValidationError(where, "attribute name is empty");
    if (is_reserved(attr.name))
      throw ValidationError(where, "attribute name uses a reserved token");
    if (attr.domain.empty())
      throw ValidationError(where, "domain of '" + attr.name + "' is empty");
    if (!attr_index_.emplace(attr.name, static_cast<int>(i)).second)
      throw ValidationError(where, "duplicate attribute '" + attr.name + "'");

    std::map<std::string, std::int32_t, std::less<>> values;
    for (std::size_t v = 0; v < attr.domain.size(); ++v) {
      const auto& token = attr.domain[v];
      if (token.empty())
        throw ValidationError(where + ".domain", "empty value token");
      if (is_reserved(token))
        throw ValidationError(where + ".domain",
                              "reserved token '" + token + "' inside domain");
      if (!values.emplace(token, static_cast<std::int32_t>(v)).second)
        throw ValidationError(where + ".domain",
                              "duplicate value '" + token + "'");
    }
    value_index_.push_back(std::move(values));
    if (attr.category != AttributeCategory::Operation)
      splittable_.push_back(static_cast<int>(i));
  }

  for (std::size_t i = 0; i < operations_.size(); ++i) {
    const auto& op = operations_[i];
    if (op.empty() || is_reserved(op))
      throw ValidationError("operations[" + std::to_string(i) + "]",
                            "operation token is empty or reserved");
    if (!op_index_.emplace(op, static_cast<std::int32_t>(i)).second)
      throw ValidationError("operations[" + std::to_string(i) + "]",
                            "duplicate operation '" + op + "'");
  }

  const int n_attrs = attribute_count();
  pred_matrix_.assign(rules_.size() * static_cast<std::size_t>(n_attrs), PredCode{});
  bound_preds_.resize(rules_.size());
  rule_op_codes_.resize(rules_.size());

  for (std::size_t r = 0; r < rules_.size(); ++r) {
    const auto& rule = rules_[r];
    const std::string where = "rules[" + std::to_string(r) + "]";
    if (!rule_pos_.emplace(rule.id, static_cast<int>(r)).second)
      throw ValidationError(where, "duplicate rule id " + std::to_string(rule.id));

    if (rule.operation == kWildcard) {
      rule_op_codes_[r] = kWildcardCode;
    } else {
      auto it = op_index_.find(rule.operation);
      if (it == op_index_.end())
        throw ValidationError(where + ".op",
                              "unknown operation '" + rule.operation + "'");
      rule_op_codes_[r] = it->second;
    }

    for (const auto& [attr_name, pred] : rule.predicates) {
      const std::string pwhere = where + ".predicates." + attr_name;
      if (pred.attribute != attr_name)
        throw ValidationError(pwhere, "predicate attribute mismatch");
      const int a = attribute_index(attr_name);
      if (a < 0) throw ValidationError(pwhere, "unknown attribute");

      std::int32_t code;
      if (pred.value == kWildcard) {
        code = kWildcardCode;
      } else if (pred.value == kUndefined) {
        code = kUndefCode;
      } else {
        code = value_code(a, pred.value);
        if (code == kUnknownCode)
          throw ValidationError(pwhere, "value '" + pred.value +
                                            "' outside domain of '" +
                                            attr_name + "'");
      }

      if (pred.relation != Relation::Eq) {
        if (code == kWildcardCode || code == kUndefCode)
          throw ValidationError(pwhere,
                                "'" + pred.value + "' only combines with '='");
        if (pred.relation != Relation::Ne && !schema_[a].ordered)
          throw ValidationError(pwhere,
                                "relational predicate on unordered attribute");
        has_relational_ = true;
      }

      // Explicit "*" predicates never bind; keep them out of the matcher.
      if (code != kWildcardCode) {
        const PredCode pc{pred.relation, code};
        pred_matrix_[r * n_attrs + a] = pc;
        bound_preds_[r].emplace_back(a, pc);
      }
    }
  }
}

int Policy::attribute_index(std::string_view name) const {
  auto it = attr_index_.find(name);
  return it == attr_index_.end() ? -1 : it->second;
}

std::int32_t Policy::value_code(int attribute_index, std::string_view token) const {
  if (token == kWildcard) return kWildcardCode;
  if (token == kUndefined) return kUndefCode;
  const auto& values = value_index_.at(attribute_index);
  auto it = values.find(token);
  return it == values.end() ? kUnknownCode : it->second;
}

const std::string& Policy::value_token(int attribute_index, std::int32_t code) const {
  if (code == kWildcardCode) return kWildcardStr;
  if (code == kUndefCode) return kUndefinedStr;
  return schema_.at(attribute_index).domain.at(code);
}

std::int32_t Policy::operation_code(std::string_view token) const {
  if (token == kWildcard) return kWildcardCode;
  auto it = op_index_.find(token);
  return it == op_index_.end() ? kUnknownCode : it->second;
}

const std::string& Policy::operation_token(std::int32_t code) const {
  if (code == kWildcardCode) return kWildcardStr;
  return operations_.at(code);
}

int Policy::rule_position(int rule_id) const {
  auto it = rule_pos_.find(rule_id);
  return it == rule_pos_.end() ? -1 : it->second;
}

PredCode Policy::rule_predicate(std::size_t rule_pos, int attribute_index) const {
  return pred_matrix_.at(rule_pos * attribute_count() + attribute_index);
}

std::int32_t Policy::rule_operation_code(std::size_t rule_pos) const {
  return rule_op_codes_.at(rule_pos);
}

CompiledRequest Policy::compile(const Request& request) const {
  CompiledRequest out;
  out.values.assign(schema_.size(), kUndefCode);
  for (const auto& [attr_name, value] : request.assignments) {
    const int a = attribute_index(attr_name);
    if (a < 0)
      throw ValidationError("request." + attr_name, "unknown attribute");
    if (value == kWildcard)
      throw ValidationError("request." + attr_name,
                            "'*' is not assignable in a request");
    if (value == kUndefined) continue;  // explicit "#" == unassigned
    const auto code = value_code(a, value);
    if (code == kUnknownCode)
      throw ValidationError("request." + attr_name,
                            "value '" + value + "' outside domain");
    out.values[a] = code;
  }
  if (request.operation.empty() || is_reserved(request.operation))
    throw ValidationError("request.op", "operation token is empty or reserved");
  if (!operations_.empty()) {
    out.operation = operation_code(request.operation);
    if (out.operation == kUnknownCode)
      throw ValidationError("request.op",
                            "unknown operation '" + request.operation + "'");
  }
  return out;
}

bool Policy::matches(std::size_t rule_pos, const CompiledRequest& request) const {
  const auto rule_op = rule_op_codes_[rule_pos];
  if (rule_op != kWildcardCode && rule_op != request.operation) return false;
  for (const auto& [a, pred] : bound_preds_[rule_pos]) {
    const auto rv = request.values[a];
    if (pred.value == kUndefCode) {
      if (rv != kUndefCode) return false;
      continue;
    }
    if (rv == kUndefCode) return false;  // "#" satisfies no concrete predicate
    switch (pred.relation) {
      case Relation::Eq: if (rv != pred.value) return false; break;
      case Relation::Ne: if (rv == pred.value) return false; break;
      case Relation::Lt: if (rv >= pred.value) return false; break;
      case Relation::Gt: if (rv <= pred.value) return false; break;
      case Relation::Le: if (rv > pred.value) return false; break;
      case Relation::Ge: if (rv < pred.value) return false; break;
    }
  }
  return true;
}

bool Policy::operator==(const Policy& other) const {
  return schema_ == other.schema_ && rules_ == other.rules_ &&
         operations_ == other.operations_;
}

bool rule_matches(const Policy& policy, const Rule& rule, const Request& request) {
  if (rule.operation != kWildcard && rule.operation != request.operation)
    return false;
  for (const auto& [attr_name, pred] : rule.predicates) {
    if (pred.value == kWildcard) continue;
    const std::string& rv = request.value_of(attr_name);
    if (pred.value == kUndefined) {
      if (rv != kUndefined) return false;
      continue;
    }
    if (rv == kUndefined) return false;
    if (pred.relation == Relation::Eq) {
      if (rv != pred.value) return false;
      continue;
    }
    if (pred.relation == Relation::Ne) {
      if (rv == pred.value) return false;
      continue;
    }
    const int a = policy.attribute_index(attr_name);
    const auto lhs = policy.value_code(a, rv);
    const auto rhs = policy.value_code(a, pred.value);
    switch (pred.relation) {
      case Relation::Lt: if (lhs >= rhs) return false; break;
      case Relation::Gt: if (lhs <= rhs) return false; break;
      case Relation::Le: if (lhs > rhs) return false; break;
      case Relation::Ge: if (lhs < rhs) return false; break;
      default: break;
    }
  }
  return true;
}

Decision oracle_decide(const Policy& policy, const Request& request) {
  return oracle_decide(policy, policy.compile(request));
}

Decision oracle_decide(const Policy& policy, const CompiledRequest& request) {
  Decision decision;
  for (std::size_t r = 0; r < policy.rule_count(); ++r) {
    if (!policy.matches(r, request)) continue;
    const auto& rule = policy.rules()[r];
    decision.matched_rule_ids.insert(rule.id);
    if (rule.operation == kWildcard) {
      if (request.operation >= 0)
        decision.granted_operations.insert(
            policy.operation_token(request.operation));
    } else {
      decision.granted_operations.insert(rule.operation);
    }
  }
  decision.allowed = !decision.matched_rule_ids.empty();
  return decision;
}

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& where, const std::string& message) {
  throw ValidationError(where, message);
}

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(where, std::string("missing field '") + key + "'");
  return *it;
}

std::string require_string(const json& obj, const char* key,
                           const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_string()) fail(where + "." + key, "expected a string");
  return v.get<std::string>();
}

}  // namespace

Policy parse_policy(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("", std::string("malformed document: ") + e.what());
  }
  return policy_from_json(doc);
}

Policy policy_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) fail("", "policy document must be a JSON object");

  std::vector<AttributeSchema> schema;
  const auto& jschema = require(doc, "schema", "policy");
  if (!jschema.is_array()) fail("schema", "expected an array");
  for (std::size_t i = 0; i < jschema.size(); ++i) {
    const std::string where = "schema[" + std::to_string(i) + "]";
    const auto& ja = jschema[i];
    if (!ja.is_object()) fail(where, "expected an object");
    AttributeSchema attr;
    attr.name = require_string(ja, "name", where);
    const auto cat = category_from_string(require_string(ja, "category", where));
    if (!cat) fail(where + ".category", "unknown category");
    attr.category = *cat;
    if (ja.contains("ordered")) {
      if (!ja["ordered"].is_boolean()) fail(where + ".ordered", "expected a bool");
      attr.ordered = ja["ordered"].get<bool>();
    }
    const auto& jdom = require(ja, "domain", where);
    if (!jdom.is_array()) fail(where + ".domain", "expected an array");
    for (const auto& v : jdom) {
      if (!v.is_string()) fail(where + ".domain", "expected string values");
      attr.domain.push_back(v.get<std::string>());
    }
    schema.push_back(std::move(attr));
  }

  std::vector<std::string> operations;
  const auto& jops = require(doc, "operations", "policy");
  if (!jops.is_array()) fail("operations", "expected an array");
  for (const auto& v : jops) {
    if (!v.is_string()) fail("operations", "expected string tokens");
    operations.push_back(v.get<std::string>());
  }

  std::vector<Rule> rules;
  const auto& jrules = require(doc, "rules", "policy");
  if (!jrules.is_array()) fail("rules", "expected an array");
  for (std::size_t i = 0; i < jrules.size(); ++i) {
    const std::string where = "rules[" + std::to_string(i) + "]";
    const auto& jr = jrules[i];
    if (!jr.is_object()) fail(where, "expected an object");
    Rule rule;
    const auto& jid = require(jr, "id", where);
    if (!jid.is_number_integer()) fail(where + ".id", "expected an integer");
    rule.id = jid.get<int>();
    rule.operation = require_string(jr, "op", where);
    const auto& jpreds = require(jr, "predicates", where);
    if (!jpreds.is_object()) fail(where + ".predicates", "expected an object");
    for (auto it = jpreds.begin(); it != jpreds.end(); ++it) {
      const std::string pwhere = where + ".predicates." + it.key();
      const auto& jp = it.value();
      if (!jp.is_object()) fail(pwhere, "expected an object");
      Predicate pred;
      pred.attribute = it.key();
      const auto rel = relation_from_string(require_string(jp, "rel", pwhere));
      if (!rel) fail(pwhere + ".rel", "unknown relation");
      pred.relation = *rel;
      pred.value = require_string(jp, "value", pwhere);
      rule.predicates.emplace(it.key(), std::move(pred));
    }
    rules.push_back(std::move(rule));
  }

  return Policy(std::move(schema), std::move(rules), std::move(operations));
}

nlohmann::ordered_json policy_to_json(const Policy& policy) {
  ordered_json doc;
  doc["schema"] = ordered_json::array();
  for (const auto& attr : policy.schema()) {
    ordered_json ja;
    ja["name"] = attr.name;
    ja["category"] = std::string(to_string(attr.category));
    ja["ordered"] = attr.ordered;
    ja["domain"] = attr.domain;
    doc["schema"].push_back(std::move(ja));
  }
  doc["operations"] = policy.operations();
  doc["rules"] = ordered_json::array();
  for (const auto& rule : policy.rules()) {
    ordered_json jr;
    jr["id"] = rule.id;
    ordered_json jpreds = ordered_json::object();
    for (const auto& [attr_name, pred] : rule.predicates) {
      jpreds[attr_name] = {{"rel", std::string(to_string(pred.relation))},
                           {"value", pred.value}};
    }
    jr["predicates"] = std::move(jpreds);
    jr["op"] = rule.operation;
    doc["rules"].push_back(std::move(jr));
  }
  return doc;
}

std::string serialize(const Policy& policy) {
  return policy_to_json(policy).dump(2);
}

Request request_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) fail("request", "expected a JSON object");
  Request request;
  const auto& jassign = require(doc, "assignments", "request");
  if (!jassign.is_object()) fail("request.assignments", "expected an object");
  for (auto it = jassign.begin(); it != jassign.end(); ++it) {
    if (!it.value().is_string())
      fail("request.assignments." + it.key(), "expected a string value");
    request.assignments.emplace(it.key(), it.value().get<std::string>());
  }
  request.operation = require_string(doc, "op", "request");
  return request;
}

nlohmann::ordered_json request_to_json(const Request& request) {
  ordered_json doc;
  doc["assignments"] = ordered_json::object();
  for (const auto& [attr, value] : request.assignments)
    doc["assignments"][attr] = value;
  doc["op"] = request.operation;
  return doc;
}

Request parse_request(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("", std::string("malformed document: ") + e.what());
  }
  return request_from_json(doc);
}

std::string serialize(const Request& request) {
  return request_to_json(request).dump(2);
}

}  // namespace abacx
