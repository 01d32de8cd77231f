#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "abacx/abac.hpp"
#include "abacx/meta.hpp"

namespace abacx {

struct DatasetParams {
  int n_users = 0;
  int n_objects = 0;
  int n_envs = 0;
  int user_attrs = 0;
  int object_attrs = 0;
  int env_attrs = 0;
  int user_values = 0;    // domain size per user attribute
  int object_values = 0;
  int env_values = 0;
  int n_rules = 0;
  int n_operations = 0;
  double wildcard_fraction = 0.4;   // per-predicate probability of "*"
  double target_allow_ratio = 0.7;  // for request pools
  std::uint64_t seed = 0;
};

// Reference configurations used throughout the benchmarks.
DatasetParams synthetic1_params();
DatasetParams synthetic2_params();

struct Entity {
  std::string id;
  std::map<std::string, std::string> attrs;

  bool operator==(const Entity&) const = default;
};

struct Dataset {
  std::string description;
  Policy policy;
  MetaPolicy meta;
  std::vector<Entity> users;
  std::vector<Entity> objects;
  std::vector<Entity> envs;
  std::vector<Request> requests;
};

// Builds per-category schemas, samples rules whose predicate values are
// replaced by "*" with probability wildcard_fraction, assigns entity
// attributes uniformly and meta-policy costs from the per-category default
// ranges. Deterministic under the rng state. The request pool starts empty;
// fill it with generate_requests.
Dataset generate_dataset(const DatasetParams& params, std::mt19937_64& rng);

// Returns n requests whose oracle-decided allow fraction matches the target
// (mix of rule-consistent and uniform sampling, each verified against the
// oracle). Throws std::invalid_argument when the target stays unreachable
// after bounded retries.
std::vector<Request> generate_requests(const Dataset& dataset, int n,
                                       double target_allow_ratio,
                                       std::mt19937_64& rng);

// Dataset file format: a superset of the policy document with
// {"description"?, schema, operations, rules, "meta", "entities":
//  {users, objects, envs}, "requests"}. Missing meta costs are filled from
// the per-category defaults.
Dataset load_dataset(const std::string& text);
Dataset load_dataset_file(const std::string& path);
std::string serialize(const Dataset& dataset);
void save_dataset_file(const Dataset& dataset, const std::string& path);

}  // namespace abacx
