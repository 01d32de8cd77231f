#include "abacx/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json_util.hpp"

namespace abacx {

DatasetParams synthetic1_params() {
  DatasetParams p;
  p.n_users = 1000;
  p.n_objects = 1000;
  p.n_envs = 10;
  p.user_attrs = 6;
  p.object_attrs = 6;
  p.env_attrs = 6;
  p.user_values = 4;
  p.object_values = 4;
  p.env_values = 4;
  p.n_rules = 1000;
  p.n_operations = 3;
  return p;
}

DatasetParams synthetic2_params() {
  DatasetParams p;
  p.n_users = 2000;
  p.n_objects = 1500;
  p.n_envs = 20;
  p.user_attrs = 8;
  p.object_attrs = 8;
  p.env_attrs = 6;
  p.user_values = 5;
  p.object_values = 5;
  p.env_values = 4;
  p.n_rules = 2000;
  p.n_operations = 1;
  return p;
}

namespace {

void check_params(const DatasetParams& p) {
  const auto positive = [](int v, const char* name) {
    if (v <= 0)
      throw std::invalid_argument(std::string("generate_dataset: ") + name +
                                  " must be positive");
  };
  positive(p.n_users, "n_users");
  positive(p.n_objects, "n_objects");
  positive(p.n_envs, "n_envs");
  positive(p.user_attrs, "user_attrs");
  positive(p.object_attrs, "object_attrs");
  positive(p.env_attrs, "env_attrs");
  positive(p.user_values, "user_values");
  positive(p.object_values, "object_values");
  positive(p.env_values, "env_values");
  positive(p.n_rules, "n_rules");
  positive(p.n_operations, "n_operations");
  if (p.wildcard_fraction < 0.0 || p.wildcard_fraction > 1.0)
    throw std::invalid_argument("generate_dataset: wildcard_fraction in [0,1]");
  if (p.target_allow_ratio < 0.0 || p.target_allow_ratio >= 1.0)
    throw std::invalid_argument("generate_dataset: target_allow_ratio in [0,1)");
}

std::vector<AttributeSchema> category_schema(AttributeCategory category,
                                             const char* prefix, int n_attrs,
                                             int n_values) {
  std::vector<AttributeSchema> out;
  for (int i = 0; i < n_attrs; ++i) {
    AttributeSchema attr;
    attr.name = prefix + std::to_string(i);
    attr.category = category;
    for (int v = 0; v < n_values; ++v)
      attr.domain.push_back(attr.name + "_v" + std::to_string(v));
    out.push_back(std::move(attr));
  }
  return out;
}

std::vector<Entity> sample_entities(const char* prefix, int count,
                                    const std::vector<AttributeSchema>& attrs,
                                    std::mt19937_64& rng) {
  std::vector<Entity> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    Entity entity;
    entity.id = prefix + std::to_string(i);
    for (const auto& attr : attrs) {
      std::uniform_int_distribution<std::size_t> pick(0, attr.domain.size() - 1);
      entity.attrs[attr.name] = attr.domain[pick(rng)];
    }
    out.push_back(std::move(entity));
  }
  return out;
}

}  // namespace

Dataset generate_dataset(const DatasetParams& params, std::mt19937_64& rng) {
  check_params(params);

  std::vector<AttributeSchema> schema;
  const auto user_schema = category_schema(AttributeCategory::User, "u",
                                           params.user_attrs, params.user_values);
  const auto object_schema = category_schema(
      AttributeCategory::Object, "o", params.object_attrs, params.object_values);
  const auto env_schema = category_schema(AttributeCategory::Environment, "e",
                                          params.env_attrs, params.env_values);
  schema.insert(schema.end(), user_schema.begin(), user_schema.end());
  schema.insert(schema.end(), object_schema.begin(), object_schema.end());
  schema.insert(schema.end(), env_schema.begin(), env_schema.end());

  std::vector<std::string> operations;
  for (int i = 0; i < params.n_operations; ++i)
    operations.push_back("op" + std::to_string(i));

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Rule> rules;
  rules.reserve(params.n_rules);
  for (int r = 0; r < params.n_rules; ++r) {
    Rule rule;
    rule.id = r + 1;
    for (const auto& attr : schema) {
      Predicate pred;
      pred.attribute = attr.name;
      if (unit(rng) < params.wildcard_fraction) {
        pred.value = std::string(kWildcard);
      } else {
        std::uniform_int_distribution<std::size_t> pick(0, attr.domain.size() - 1);
        pred.value = attr.domain[pick(rng)];
      }
      rule.predicates.emplace(attr.name, std::move(pred));
    }
    std::uniform_int_distribution<std::size_t> pick_op(0, operations.size() - 1);
    rule.operation = operations[pick_op(rng)];
    rules.push_back(std::move(rule));
  }

  Dataset dataset;
  {
    std::ostringstream description;
    description << "synthetic dataset: " << params.n_rules << " rules over "
                << schema.size() << " attributes, wildcard fraction "
                << params.wildcard_fraction;
    dataset.description = description.str();
  }
  dataset.policy = Policy(std::move(schema), std::move(rules), std::move(operations));

  dataset.meta.set_bounds(0.0, 100.0);
  for (const auto& attr : dataset.policy.schema())
    dataset.meta.set_attribute_cost(attr.name, default_cost(attr.category, rng));

  dataset.users = sample_entities("user", params.n_users, user_schema, rng);
  dataset.objects = sample_entities("object", params.n_objects, object_schema, rng);
  dataset.envs = sample_entities("env", params.n_envs, env_schema, rng);
  return dataset;
}

std::vector<Request> generate_requests(const Dataset& dataset, int n,
                                       double target_allow_ratio,
                                       std::mt19937_64& rng) {
  if (n < 0) throw std::invalid_argument("generate_requests: n must be >= 0");
  if (target_allow_ratio < 0.0 || target_allow_ratio > 1.0)
    throw std::invalid_argument("generate_requests: target in [0,1]");
  if (n == 0) return {};

  const Policy& policy = dataset.policy;
  if (policy.operations().empty())
    throw std::invalid_argument("generate_requests: policy declares no operations");
  const int want_allowed =
      static_cast<int>(std::lround(n * target_allow_ratio));
  if (want_allowed > 0 && policy.rule_count() == 0)
    throw std::invalid_argument(
        "generate_requests: positive allow target on an empty policy");

  std::uniform_int_distribution<std::size_t> pick_op(
      0, policy.operations().size() - 1);

  const auto uniform_request = [&]() {
    Request request;
    for (const auto& attr : policy.schema()) {
      std::uniform_int_distribution<std::size_t> pick(0, attr.domain.size() - 1);
      request.assignments[attr.name] = attr.domain[pick(rng)];
    }
    request.operation = policy.operations()[pick_op(rng)];
    return request;
  };

  // Perturb a random rule into a concrete request: keep its equality
  // predicates, sample everything unconstrained uniformly.
  const auto rule_consistent_request = [&]() {
    std::uniform_int_distribution<std::size_t> pick_rule(0, policy.rule_count() - 1);
    const Rule& rule = policy.rules()[pick_rule(rng)];
    Request request;
    for (const auto& attr : policy.schema()) {
      auto it = rule.predicates.find(attr.name);
      if (it != rule.predicates.end() && it->second.relation == Relation::Eq &&
          it->second.value != kWildcard) {
        if (it->second.value != kUndefined)
          request.assignments[attr.name] = it->second.value;
        continue;  // "#" predicates leave the attribute unassigned
      }
      std::uniform_int_distribution<std::size_t> pick(0, attr.domain.size() - 1);
      request.assignments[attr.name] = attr.domain[pick(rng)];
    }
    request.operation = rule.operation == kWildcard
                            ? policy.operations()[pick_op(rng)]
                            : rule.operation;
    return request;
  };

  std::vector<Request> allowed, denied;
  const long budget = 200L * n + 1000;
  long attempts = 0;
  while (static_cast<int>(allowed.size()) < want_allowed) {
    if (++attempts > budget)
      throw std::invalid_argument(
          "generate_requests: allow target unreachable after bounded retries");
    Request request = rule_consistent_request();
    if (oracle_decide(policy, request).allowed)
      allowed.push_back(std::move(request));
  }
  attempts = 0;
  while (static_cast<int>(denied.size()) < n - want_allowed) {
    if (++attempts > budget)
      throw std::invalid_argument(
          "generate_requests: deny target unreachable after bounded retries");
    Request request = uniform_request();
    if (!oracle_decide(policy, request).allowed)
      denied.push_back(std::move(request));
  }

  std::vector<Request> pool;
  pool.reserve(n);
  pool.insert(pool.end(), allowed.begin(), allowed.end());
  pool.insert(pool.end(), denied.begin(), denied.end());
  std::shuffle(pool.begin(), pool.end(), rng);
  return pool;
}

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::vector<Entity> entities_from_json(const json& arr, const Policy& policy,
                                       const std::string& where) {
  if (!arr.is_array()) throw ValidationError(where, "expected an array");
  std::vector<Entity> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& je = arr[i];
    const std::string ewhere = where + "[" + std::to_string(i) + "]";
    if (!je.is_object() || !je.contains("id"))
      throw ValidationError(ewhere, "expected {id, attrs}");
    Entity entity;
    entity.id = je["id"].get<std::string>();
    if (je.contains("attrs")) {
      for (auto it = je["attrs"].begin(); it != je["attrs"].end(); ++it) {
        const int a = policy.attribute_index(it.key());
        if (a < 0)
          throw ValidationError(ewhere + ".attrs." + it.key(),
                                "unknown attribute");
        const auto value = it.value().get<std::string>();
        if (value != kUndefined && policy.value_code(a, value) < 0)
          throw ValidationError(ewhere + ".attrs." + it.key(),
                                "value '" + value + "' outside domain");
        entity.attrs.emplace(it.key(), value);
      }
    }
    out.push_back(std::move(entity));
  }
  return out;
}

ordered_json entities_to_json(const std::vector<Entity>& entities) {
  ordered_json arr = ordered_json::array();
  for (const auto& entity : entities) {
    ordered_json je;
    je["id"] = entity.id;
    je["attrs"] = ordered_json::object();
    for (const auto& [attr, value] : entity.attrs) je["attrs"][attr] = value;
    arr.push_back(std::move(je));
  }
  return arr;
}

}  // namespace

Dataset load_dataset(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("", std::string("malformed document: ") + e.what());
  }
  if (!doc.is_object())
    throw ValidationError("dataset", "expected a JSON object");

  Dataset dataset;
  if (doc.contains("description"))
    dataset.description = doc["description"].get<std::string>();
  dataset.policy = policy_from_json(doc);
  dataset.meta = doc.contains("meta") ? meta_from_json(doc["meta"]) : MetaPolicy{};

  // Fill missing meta costs from the category defaults; the fixed seed keeps
  // loads reproducible.
  std::mt19937_64 fill_rng(0x5eedbeef);
  if (dataset.meta.attribute_costs().empty()) dataset.meta.set_bounds(0.0, 100.0);
  for (const auto& attr : dataset.policy.schema()) {
    if (!dataset.meta.has_attribute_cost(attr.name))
      dataset.meta.set_attribute_cost(attr.name,
                                      default_cost(attr.category, fill_rng));
  }
  dataset.meta.validate();

  if (doc.contains("entities")) {
    const auto& je = doc["entities"];
    if (!je.is_object()) throw ValidationError("entities", "expected an object");
    if (je.contains("users"))
      dataset.users = entities_from_json(je["users"], dataset.policy,
                                         "entities.users");
    if (je.contains("objects"))
      dataset.objects = entities_from_json(je["objects"], dataset.policy,
                                           "entities.objects");
    if (je.contains("envs"))
      dataset.envs = entities_from_json(je["envs"], dataset.policy,
                                        "entities.envs");
  }

  if (doc.contains("requests")) {
    const auto& jr = doc["requests"];
    if (!jr.is_array()) throw ValidationError("requests", "expected an array");
    for (std::size_t i = 0; i < jr.size(); ++i) {
      Request request = request_from_json(jr[i]);
      try {
        dataset.policy.compile(request);
      } catch (const ValidationError& e) {
        throw ValidationError("requests[" + std::to_string(i) + "]", e.what());
      }
      dataset.requests.push_back(std::move(request));
    }
  }
  return dataset;
}

Dataset load_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path, "cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return load_dataset(buffer.str());
}

std::string serialize(const Dataset& dataset) {
  ordered_json doc;
  if (!dataset.description.empty()) doc["description"] = dataset.description;
  const ordered_json policy_doc = policy_to_json(dataset.policy);
  for (const auto& [key, value] : policy_doc.items()) doc[key] = value;
  doc["meta"] = meta_to_json(dataset.meta);
  doc["entities"] = {{"users", entities_to_json(dataset.users)},
                     {"objects", entities_to_json(dataset.objects)},
                     {"envs", entities_to_json(dataset.envs)}};
  ordered_json jr = ordered_json::array();
  for (const auto& request : dataset.requests)
    jr.push_back(request_to_json(request));
  doc["requests"] = std::move(jr);
  return doc.dump(2);
}

void save_dataset_file(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError(path, "cannot open file for writing");
  out << serialize(dataset) << '\n';
}

}  // namespace abacx
