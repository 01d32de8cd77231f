#pragma once

#include <map>
#include <optional>
#include <random>
#include <string>
#include <tuple>

#include "abacx/abac.hpp"

namespace abacx {

// Actor id matching any actor in a visibility entry.
inline constexpr std::string_view kAnyActor = "*";

// Normalized changeability: 100 * (1 - (cost - cost_min) / (cost_max - cost_min)).
// Throws std::invalid_argument for degenerate bounds or a cost outside them.
double changeability(double cost, double cost_min, double cost_max);

// Uniform sample from the per-category fallback cost range:
// environment [0,40], user [50,90], object [80,100]. Operation-category
// attributes have no default and must be assigned explicitly.
double default_cost(AttributeCategory category, std::mt19937_64& rng);

// Visibility flags and change-cost assignments layered over a policy.
// Immutable in use; mutate only while assembling.
class MetaPolicy {
 public:
  MetaPolicy() = default;

  void set_bounds(double cost_min, double cost_max);
  void set_attribute_cost(const std::string& attribute, double cost);
  void set_transition_cost(const std::string& attribute, const std::string& from,
                           const std::string& to, double cost);

  // Binary visibility, keyed by attribute / optional value / actor.
  // `actor` may be kAnyActor to apply uniformly to everyone.
  void set_visibility(const std::string& attribute,
                      const std::optional<std::string>& value,
                      const std::string& actor, bool visible);

  double cost_min() const { return cost_min_; }
  double cost_max() const { return cost_max_; }
  const std::map<std::string, double>& attribute_costs() const { return costs_; }
  const std::map<std::tuple<std::string, std::string, std::string>, double>&
  transitions() const { return transitions_; }
  const std::map<std::tuple<std::string, std::string, std::string>, bool>&
  visibility_entries() const { return visibility_; }
  bool has_attribute_cost(const std::string& attribute) const;

  // Attribute-level scalar cost; throws ValidationError for unknown attributes.
  double attribute_cost(const std::string& attribute) const;

  // Per-transition cost when declared, attribute scalar otherwise,
  // 0 when from == to.
  double change_cost(const std::string& attribute, const std::string& from,
                     const std::string& to) const;

  // Changeability of an attribute under this meta-policy's bounds.
  double changeability_of(const std::string& attribute) const;

  // Attribute-level visibility. Lookup precedence:
  // (attr, actor) > (attr, any-actor) > default visible.
  bool visible(const std::string& attribute, const std::string& actor) const;

  // Value-refined visibility, used for tree edges:
  // (attr, value, actor) > (attr, value, any) > attribute-level.
  bool visible(const std::string& attribute, const std::string& value,
               const std::string& actor) const;

  // Checks bound sanity and that every assigned cost lies within bounds.
  void validate() const;

 private:
  double cost_min_ = 0.0;
  double cost_max_ = 100.0;
  std::map<std::string, double> costs_;
  std::map<std::tuple<std::string, std::string, std::string>, double> transitions_;
  // Key: (attribute, value or "" for attribute-level, actor).
  std::map<std::tuple<std::string, std::string, std::string>, bool> visibility_;
};

// Meta-policy file format:
// {"bounds": {"min", "max"}, "costs": {attr: number},
//  "transitions": [{"attr", "from", "to", "cost"}],
//  "visibility": [{"attr", "value"?, "actor", "visible": 0|1}]}
MetaPolicy parse_meta(const std::string& text);
std::string serialize(const MetaPolicy& meta);

}  // namespace abacx
