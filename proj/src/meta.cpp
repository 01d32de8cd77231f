#include "abacx/meta.hpp"

#include <stdexcept>

#include "json_util.hpp"

namespace abacx {

double changeability(double cost, double cost_min, double cost_max) {
  if (!(cost_min < cost_max))
    throw std::invalid_argument("changeability: degenerate cost bounds");
  if (cost < cost_min || cost > cost_max)
    throw std::invalid_argument("changeability: cost outside bounds");
  return 100.0 * (1.0 - (cost - cost_min) / (cost_max - cost_min));
}

double default_cost(AttributeCategory category, std::mt19937_64& rng) {
  double lo = 0.0, hi = 0.0;
  switch (category) {
    case AttributeCategory::Environment: lo = 0.0; hi = 40.0; break;
    case AttributeCategory::User: lo = 50.0; hi = 90.0; break;
    case AttributeCategory::Object: lo = 80.0; hi = 100.0; break;
    case AttributeCategory::Operation:
      throw std::invalid_argument(
          "default_cost: operation attributes need an explicit cost");
  }
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

void MetaPolicy::set_bounds(double cost_min, double cost_max) {
  cost_min_ = cost_min;
  cost_max_ = cost_max;
}

void MetaPolicy::set_attribute_cost(const std::string& attribute, double cost) {
  costs_[attribute] = cost;
}

void MetaPolicy::set_transition_cost(const std::string& attribute,
                                     const std::string& from,
                                     const std::string& to, double cost) {
  if (from == to && cost != 0.0)
    throw ValidationError("transitions",
                          "identity transition for '" + attribute +
                              "' must have cost 0");
  if (cost < 0.0)
    throw ValidationError("transitions", "negative transition cost");
  transitions_[{attribute, from, to}] = cost;
}

void MetaPolicy::set_visibility(const std::string& attribute,
                                const std::optional<std::string>& value,
                                const std::string& actor, bool visible) {
  visibility_[{attribute, value.value_or(""), actor}] = visible;
}

bool MetaPolicy::has_attribute_cost(const std::string& attribute) const {
  return costs_.count(attribute) > 0;
}

double MetaPolicy::attribute_cost(const std::string& attribute) const {
  auto it = costs_.find(attribute);
  if (it == costs_.end())
    throw ValidationError("meta.costs", "no change cost for attribute '" +
                                            attribute + "'");
  return it->second;
}

double MetaPolicy::change_cost(const std::string& attribute,
                               const std::string& from,
                               const std::string& to) const {
  if (from == to) return 0.0;
  auto it = transitions_.find({attribute, from, to});
  if (it != transitions_.end()) return it->second;
  return attribute_cost(attribute);
}

double MetaPolicy::changeability_of(const std::string& attribute) const {
  return changeability(attribute_cost(attribute), cost_min_, cost_max_);
}

bool MetaPolicy::visible(const std::string& attribute,
                         const std::string& actor) const {
  auto it = visibility_.find({attribute, "", actor});
  if (it != visibility_.end()) return it->second;
  it = visibility_.find({attribute, "", std::string(kAnyActor)});
  if (it != visibility_.end()) return it->second;
  return true;
}

bool MetaPolicy::visible(const std::string& attribute, const std::string& value,
                         const std::string& actor) const {
  auto it = visibility_.find({attribute, value, actor});
  if (it != visibility_.end()) return it->second;
  it = visibility_.find({attribute, value, std::string(kAnyActor)});
  if (it != visibility_.end()) return it->second;
  return visible(attribute, actor);
}

void MetaPolicy::validate() const {
  if (!(cost_min_ < cost_max_))
    throw ValidationError("meta.bounds", "min must be below max");
  for (const auto& [attr, cost] : costs_) {
    if (cost < cost_min_ || cost > cost_max_)
      throw ValidationError("meta.costs",
                            "cost of '" + attr + "' outside bounds");
  }
  for (const auto& [key, cost] : transitions_) {
    if (cost < 0.0)
      throw ValidationError("meta.transitions", "negative transition cost");
  }
}

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

}  // namespace

MetaPolicy meta_from_json(const nlohmann::json& doc) {
  if (!doc.is_object())
    throw ValidationError("meta", "expected a JSON object");
  MetaPolicy meta;

  if (doc.contains("bounds")) {
    const auto& jb = doc["bounds"];
    if (!jb.is_object() || !jb.contains("min") || !jb.contains("max") ||
        !jb["min"].is_number() || !jb["max"].is_number())
      throw ValidationError("meta.bounds", "expected {min, max} numbers");
    meta.set_bounds(jb["min"].get<double>(), jb["max"].get<double>());
  }

  if (doc.contains("costs")) {
    const auto& jc = doc["costs"];
    if (!jc.is_object()) throw ValidationError("meta.costs", "expected an object");
    for (auto it = jc.begin(); it != jc.end(); ++it) {
      if (!it.value().is_number())
        throw ValidationError("meta.costs." + it.key(), "expected a number");
      meta.set_attribute_cost(it.key(), it.value().get<double>());
    }
  }

  if (doc.contains("transitions")) {
    const auto& jt = doc["transitions"];
    if (!jt.is_array())
      throw ValidationError("meta.transitions", "expected an array");
    for (std::size_t i = 0; i < jt.size(); ++i) {
      const auto& e = jt[i];
      const std::string where = "meta.transitions[" + std::to_string(i) + "]";
      if (!e.is_object() || !e.contains("attr") || !e.contains("from") ||
          !e.contains("to") || !e.contains("cost") || !e["cost"].is_number())
        throw ValidationError(where, "expected {attr, from, to, cost}");
      meta.set_transition_cost(e["attr"].get<std::string>(),
                               e["from"].get<std::string>(),
                               e["to"].get<std::string>(),
                               e["cost"].get<double>());
    }
  }

  if (doc.contains("visibility")) {
    const auto& jv = doc["visibility"];
    if (!jv.is_array())
      throw ValidationError("meta.visibility", "expected an array");
    for (std::size_t i = 0; i < jv.size(); ++i) {
      const auto& e = jv[i];
      const std::string where = "meta.visibility[" + std::to_string(i) + "]";
      if (!e.is_object() || !e.contains("attr") || !e.contains("actor") ||
          !e.contains("visible"))
        throw ValidationError(where, "expected {attr, value?, actor, visible}");
      const auto& flag = e["visible"];
      // The visibility model is binary; fractional disclosure is rejected.
      if (!flag.is_number_integer() ||
          (flag.get<int>() != 0 && flag.get<int>() != 1))
        throw ValidationError(where + ".visible", "must be exactly 0 or 1");
      std::optional<std::string> value;
      if (e.contains("value")) value = e["value"].get<std::string>();
      meta.set_visibility(e["attr"].get<std::string>(), value,
                          e["actor"].get<std::string>(), flag.get<int>() == 1);
    }
  }

  meta.validate();
  return meta;
}

nlohmann::ordered_json meta_to_json(const MetaPolicy& meta) {
  ordered_json doc;
  doc["bounds"] = {{"min", meta.cost_min()}, {"max", meta.cost_max()}};
  doc["costs"] = ordered_json::object();
  for (const auto& [attr, cost] : meta.attribute_costs())
    doc["costs"][attr] = cost;
  ordered_json jt = ordered_json::array();
  for (const auto& [key, cost] : meta.transitions()) {
    jt.push_back({{"attr", std::get<0>(key)},
                  {"from", std::get<1>(key)},
                  {"to", std::get<2>(key)},
                  {"cost", cost}});
  }
  if (!jt.empty()) doc["transitions"] = std::move(jt);
  ordered_json jv = ordered_json::array();
  for (const auto& [key, flag] : meta.visibility_entries()) {
    ordered_json e;
    e["attr"] = std::get<0>(key);
    if (!std::get<1>(key).empty()) e["value"] = std::get<1>(key);
    e["actor"] = std::get<2>(key);
    e["visible"] = flag ? 1 : 0;
    jv.push_back(std::move(e));
  }
  if (!jv.empty()) doc["visibility"] = std::move(jv);
  return doc;
}

MetaPolicy parse_meta(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("", std::string("malformed document: ") + e.what());
  }
  return meta_from_json(doc);
}

std::string serialize(const MetaPolicy& meta) {
  return meta_to_json(meta).dump(2);
}

}  // namespace abacx
