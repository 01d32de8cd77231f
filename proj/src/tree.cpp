#include "abacx/tree.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "json_util.hpp"

namespace abacx {

std::string_view to_string(SplitHeuristic heuristic) {
  switch (heuristic) {
    case SplitHeuristic::HighestEntropy: return "highest_entropy";
    case SplitHeuristic::LowestEntropy: return "lowest_entropy";
    case SplitHeuristic::HighCostFirst: return "high_cost_first";
    case SplitHeuristic::LowCostFirst: return "low_cost_first";
    case SplitHeuristic::Random: return "random";
  }
  return "highest_entropy";
}

std::optional<SplitHeuristic> heuristic_from_string(std::string_view text) {
  if (text == "highest_entropy" || text == "entropy")
    return SplitHeuristic::HighestEntropy;
  if (text == "lowest_entropy") return SplitHeuristic::LowestEntropy;
  if (text == "high_cost_first") return SplitHeuristic::HighCostFirst;
  if (text == "low_cost_first") return SplitHeuristic::LowCostFirst;
  if (text == "random") return SplitHeuristic::Random;
  return std::nullopt;
}

double entropy(std::span<const std::uint64_t> class_counts) {
  std::uint64_t total = 0;
  for (auto c : class_counts) total += c;
  if (total == 0)
    throw std::invalid_argument("entropy: all class counts are zero");
  double h = 0.0;
  for (auto c : class_counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h;
}

namespace {

// Partition symbol for a rule's predicate on an attribute: wildcard and
// absent collapse to one symbol, "#" and each domain value stand alone.
std::int32_t partition_symbol(PredCode pred) {
  return pred.value == kNoPredicateCode ? kWildcardCode : pred.value;
}

double gain_indexed(const Policy& policy,
                    const std::vector<std::uint32_t>& rule_positions,
                    int attribute_index) {
  std::map<std::int32_t, std::uint64_t> counts;
  for (auto pos : rule_positions)
    ++counts[partition_symbol(policy.rule_predicate(pos, attribute_index))];

  std::vector<std::uint64_t> parent_counts;
  parent_counts.reserve(counts.size());
  for (const auto& [symbol, n] : counts) parent_counts.push_back(n);
  const double h_parent = entropy(parent_counts);

  // Each partition groups rules sharing one symbol, so its own value
  // distribution is pure and the weighted remainder vanishes.
  double remainder = 0.0;
  const double total = static_cast<double>(rule_positions.size());
  for (const auto& [symbol, n] : counts) {
    const std::uint64_t partition_counts[] = {n};
    remainder += (static_cast<double>(n) / total) * entropy(partition_counts);
  }
  return h_parent - remainder;
}

// Candidates arrive sorted by attribute name; scan order breaks ties.
int select_indexed(const Policy& policy,
                   const std::vector<std::uint32_t>& rule_positions,
                   const std::vector<int>& candidates, SplitHeuristic heuristic,
                   const MetaPolicy& meta, std::mt19937_64& rng) {
  if (candidates.empty())
    throw std::invalid_argument("select_split_attribute: no candidates");
  if (candidates.size() == 1) return candidates.front();

  if (heuristic == SplitHeuristic::Random) {
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    return candidates[pick(rng)];
  }

  const bool maximize = heuristic == SplitHeuristic::HighestEntropy ||
                        heuristic == SplitHeuristic::HighCostFirst;
  const bool by_cost = heuristic == SplitHeuristic::HighCostFirst ||
                       heuristic == SplitHeuristic::LowCostFirst;

  int best = candidates.front();
  double best_score = 0.0;
  bool first = true;
  for (int a : candidates) {
    const double score =
        by_cost ? meta.attribute_cost(policy.attribute(a).name)
                : gain_indexed(policy, rule_positions, a);
    if (first || (maximize ? score > best_score : score < best_score)) {
      best = a;
      best_score = score;
      first = false;
    }
  }
  return best;
}

std::vector<int> sorted_by_name(const Policy& policy, std::vector<int> attrs) {
  std::sort(attrs.begin(), attrs.end(), [&](int lhs, int rhs) {
    return policy.attribute(lhs).name < policy.attribute(rhs).name;
  });
  return attrs;
}

struct TreeBuilder {
  const Policy& policy;
  SplitHeuristic heuristic;
  const MetaPolicy& meta;
  std::mt19937_64& rng;
  std::vector<TreeNode> nodes;

  std::uint32_t make_leaf(std::vector<std::uint32_t> rule_positions,
                          std::int32_t parent) {
    TreeNode node;
    node.id = static_cast<std::uint32_t>(nodes.size());
    node.kind = TreeNode::Kind::Leaf;
    node.parent = parent;
    std::sort(rule_positions.begin(), rule_positions.end());
    std::set<std::int32_t> ops;
    for (auto pos : rule_positions) ops.insert(policy.rule_operation_code(pos));
    node.op_codes.assign(ops.begin(), ops.end());
    node.rule_positions = std::move(rule_positions);
    nodes.push_back(std::move(node));
    return nodes.back().id;
  }

  bool any_unconsumed_predicate(const std::vector<std::uint32_t>& rule_positions,
                                const std::vector<int>& unused) const {
    for (auto pos : rule_positions)
      for (int a : unused) {
        const auto v = policy.rule_predicate(pos, a).value;
        if (v >= 0 || v == kUndefCode) return true;
      }
    return false;
  }

  std::uint32_t build(const std::vector<std::uint32_t>& rule_positions,
                      const std::vector<int>& unused, std::int32_t parent) {
    if (rule_positions.empty() || unused.empty() ||
        !any_unconsumed_predicate(rule_positions, unused))
      return make_leaf(rule_positions, parent);

    const int attr =
        select_indexed(policy, rule_positions, unused, heuristic, meta, rng);

    // One bucket per concrete predicate value; unconstrained and wildcard
    // rules descend the wildcard edge only.
    std::map<std::int32_t, std::vector<std::uint32_t>> buckets;
    std::vector<std::uint32_t> wildcard_bucket;
    for (auto pos : rule_positions) {
      const auto v = policy.rule_predicate(pos, attr).value;
      if (v == kNoPredicateCode)
        wildcard_bucket.push_back(pos);
      else
        buckets[v].push_back(pos);
    }

    const auto id = static_cast<std::uint32_t>(nodes.size());
    {
      TreeNode node;
      node.id = id;
      node.kind = TreeNode::Kind::Internal;
      node.parent = parent;
      node.attribute = attr;
      nodes.push_back(std::move(node));
    }

    std::vector<int> remaining;
    remaining.reserve(unused.size() - 1);
    for (int a : unused)
      if (a != attr) remaining.push_back(a);

    std::vector<std::int32_t> codes;
    for (const auto& [code, bucket] : buckets) codes.push_back(code);
    std::sort(codes.begin(), codes.end(), [&](std::int32_t lhs, std::int32_t rhs) {
      return policy.value_token(attr, lhs) < policy.value_token(attr, rhs);
    });

    std::vector<TreeNode::Edge> edges;
    edges.reserve(codes.size());
    for (auto code : codes) {
      const auto child =
          build(buckets[code], remaining, static_cast<std::int32_t>(id));
      edges.push_back({code, child});
    }
    std::int32_t wildcard_child = -1;
    if (!wildcard_bucket.empty())
      wildcard_child = static_cast<std::int32_t>(
          build(wildcard_bucket, remaining, static_cast<std::int32_t>(id)));

    nodes[id].edges = std::move(edges);
    nodes[id].wildcard_child = wildcard_child;
    return id;
  }
};

}  // namespace

double information_gain(const Policy& policy, const std::vector<int>& rule_ids,
                        const std::string& attribute) {
  if (rule_ids.empty())
    throw std::invalid_argument("information_gain: empty rule set");
  const int attr = policy.attribute_index(attribute);
  if (attr < 0)
    throw std::invalid_argument("information_gain: unknown attribute '" +
                                attribute + "'");
  std::vector<std::uint32_t> positions;
  positions.reserve(rule_ids.size());
  for (int id : rule_ids) {
    const int pos = policy.rule_position(id);
    if (pos < 0)
      throw std::invalid_argument("information_gain: unknown rule id " +
                                  std::to_string(id));
    positions.push_back(static_cast<std::uint32_t>(pos));
  }
  return gain_indexed(policy, positions, attr);
}

std::string select_split_attribute(const Policy& policy,
                                   const std::vector<int>& rule_ids,
                                   const std::vector<std::string>& candidates,
                                   SplitHeuristic heuristic,
                                   const MetaPolicy& meta,
                                   std::mt19937_64& rng) {
  if (candidates.empty())
    throw std::invalid_argument("select_split_attribute: no candidates");
  std::vector<int> candidate_indices;
  for (const auto& name : candidates) {
    const int a = policy.attribute_index(name);
    if (a < 0)
      throw std::invalid_argument("select_split_attribute: unknown attribute '" +
                                  name + "'");
    candidate_indices.push_back(a);
  }
  candidate_indices = sorted_by_name(policy, std::move(candidate_indices));

  std::vector<std::uint32_t> positions;
  for (int id : rule_ids) {
    const int pos = policy.rule_position(id);
    if (pos < 0)
      throw std::invalid_argument("select_split_attribute: unknown rule id " +
                                  std::to_string(id));
    positions.push_back(static_cast<std::uint32_t>(pos));
  }

  const int chosen = select_indexed(policy, positions, candidate_indices,
                                    heuristic, meta, rng);
  return policy.attribute(chosen).name;
}

PolicyTree build_tree(const Policy& policy, SplitHeuristic heuristic,
                      const MetaPolicy& meta, std::mt19937_64& rng) {
  if (policy.has_relational_predicates())
    throw ValidationError("tree", "unsupported predicate in tree construction");

  TreeBuilder builder{policy, heuristic, meta, rng, {}};
  std::vector<std::uint32_t> all_rules(policy.rule_count());
  for (std::size_t i = 0; i < all_rules.size(); ++i)
    all_rules[i] = static_cast<std::uint32_t>(i);

  const auto root = builder.build(
      all_rules, sorted_by_name(policy, policy.splittable_attributes()), -1);
  return PolicyTree(std::make_shared<Policy>(policy), std::move(builder.nodes),
                    root, heuristic);
}

PolicyTree::PolicyTree(std::shared_ptr<const Policy> policy,
                       std::vector<TreeNode> nodes, std::uint32_t root,
                       SplitHeuristic heuristic)
    : policy_(std::move(policy)),
      nodes_(std::move(nodes)),
      root_(root),
      heuristic_(heuristic) {
  if (!policy_) throw std::invalid_argument("PolicyTree: null policy");
  if (root_ >= nodes_.size())
    throw ValidationError("tree", "root id out of range");

  std::vector<std::pair<std::uint32_t, int>> stack{{root_, 0}};
  while (!stack.empty()) {
    const auto [id, depth] = stack.back();
    stack.pop_back();
    const auto& node = nodes_.at(id);
    height_ = std::max(height_, depth);
    if (node.is_leaf()) continue;
    max_branching_ = std::max(max_branching_, node.branching());
    for (const auto& edge : node.edges) stack.push_back({edge.child, depth + 1});
    if (node.wildcard_child >= 0)
      stack.push_back({static_cast<std::uint32_t>(node.wildcard_child), depth + 1});
  }
}

int PolicyTree::attribute_count() const {
  return static_cast<int>(policy_->splittable_attributes().size());
}

std::vector<int> PolicyTree::leaf_rule_ids(const TreeNode& node) const {
  std::vector<int> ids;
  ids.reserve(node.rule_positions.size());
  for (auto pos : node.rule_positions) ids.push_back(policy_->rules()[pos].id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

TreeValidationReport validate_tree(const PolicyTree& tree, const Policy& policy) {
  TreeValidationReport report;
  std::set<std::uint32_t> leaf_covered;
  std::size_t reached = 0;

  struct Frame {
    std::uint32_t id;
    std::vector<std::pair<int, std::int32_t>> exact_path;  // (attr, value)
    std::vector<int> path_attrs;
  };
  std::vector<Frame> stack{{tree.root(), {}, {}}};
  while (!stack.empty()) {
    Frame frame = std::move(stack.back());
    stack.pop_back();
    ++reached;
    const auto& node = tree.node(frame.id);

    if (node.is_leaf()) {
      for (auto pos : node.rule_positions) {
        leaf_covered.insert(pos);
        for (const auto& [attr, value] : frame.exact_path) {
          const auto pred = policy.rule_predicate(pos, attr);
          if (pred.value == kNoPredicateCode) continue;
          if (pred.relation != Relation::Eq) continue;
          if (pred.value != value) {
            report.violations.push_back(
                "leaf " + std::to_string(node.id) + ": rule " +
                std::to_string(policy.rules()[pos].id) +
                " contradicts path predicate on '" +
                policy.attribute(attr).name + "'");
          }
        }
      }
      continue;
    }

    if (node.branching() == 0)
      report.violations.push_back("internal node " + std::to_string(node.id) +
                                  " has no outgoing edge");
    if (std::find(frame.path_attrs.begin(), frame.path_attrs.end(),
                  node.attribute) != frame.path_attrs.end())
      report.violations.push_back(
          "attribute '" + policy.attribute(node.attribute).name +
          "' tested twice on the path to node " + std::to_string(node.id));

    auto path_attrs = frame.path_attrs;
    path_attrs.push_back(node.attribute);
    for (const auto& edge : node.edges) {
      Frame child{edge.child, frame.exact_path, path_attrs};
      child.exact_path.emplace_back(node.attribute, edge.value);
      stack.push_back(std::move(child));
    }
    if (node.wildcard_child >= 0)
      stack.push_back({static_cast<std::uint32_t>(node.wildcard_child),
                       frame.exact_path, path_attrs});
  }

  if (reached != tree.node_count())
    report.violations.push_back("unreachable nodes: arena holds " +
                                std::to_string(tree.node_count()) +
                                ", reached " + std::to_string(reached));
  for (std::size_t pos = 0; pos < policy.rule_count(); ++pos) {
    if (!leaf_covered.count(static_cast<std::uint32_t>(pos)))
      report.violations.push_back(
          "rule " + std::to_string(policy.rules()[pos].id) +
          " appears in no leaf");
  }
  return report;
}

namespace {
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;
}  // namespace

std::string dump_tree(const PolicyTree& tree) {
  const auto& policy = tree.policy();
  ordered_json doc;
  doc["root"] = tree.root();
  doc["heuristic"] = std::string(to_string(tree.heuristic()));
  doc["node_count"] = tree.node_count();
  doc["nodes"] = ordered_json::array();
  for (const auto& node : tree.nodes()) {
    ordered_json jn;
    jn["id"] = node.id;
    if (node.is_leaf()) {
      jn["kind"] = "leaf";
      jn["rule_ids"] = tree.leaf_rule_ids(node);
      ordered_json ops = ordered_json::array();
      for (auto code : node.op_codes) ops.push_back(policy.operation_token(code));
      jn["ops"] = std::move(ops);
    } else {
      jn["kind"] = "internal";
      jn["attribute"] = policy.attribute(node.attribute).name;
      ordered_json edges = ordered_json::object();
      for (const auto& edge : node.edges)
        edges[policy.value_token(node.attribute, edge.value)] = edge.child;
      jn["edges"] = std::move(edges);
      if (node.wildcard_child >= 0) jn["wildcard"] = node.wildcard_child;
    }
    doc["nodes"].push_back(std::move(jn));
  }
  return doc.dump(2);
}

PolicyTree load_tree(const std::string& text,
                     std::shared_ptr<const Policy> policy) {
  if (!policy) throw std::invalid_argument("load_tree: null policy");
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("", std::string("malformed document: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("root") || !doc.contains("nodes"))
    throw ValidationError("tree", "expected {root, heuristic, node_count, nodes}");

  SplitHeuristic heuristic = SplitHeuristic::HighestEntropy;
  if (doc.contains("heuristic")) {
    const auto h = heuristic_from_string(doc["heuristic"].get<std::string>());
    if (!h) throw ValidationError("tree.heuristic", "unknown heuristic");
    heuristic = *h;
  }

  const auto& jnodes = doc["nodes"];
  if (!jnodes.is_array()) throw ValidationError("tree.nodes", "expected an array");
  std::vector<TreeNode> nodes(jnodes.size());
  for (const auto& jn : jnodes) {
    const std::string where =
        "tree.nodes[" + std::to_string(jn.value("id", -1)) + "]";
    if (!jn.contains("id") || !jn["id"].is_number_unsigned())
      throw ValidationError(where, "missing node id");
    const auto id = jn["id"].get<std::uint32_t>();
    if (id >= nodes.size()) throw ValidationError(where, "node id out of range");
    TreeNode& node = nodes[id];
    node.id = id;
    const auto kind = jn.value("kind", "");
    if (kind == "leaf") {
      node.kind = TreeNode::Kind::Leaf;
      std::set<std::int32_t> ops;
      if (jn.contains("rule_ids")) {
        for (const auto& jid : jn["rule_ids"]) {
          const int pos = policy->rule_position(jid.get<int>());
          if (pos < 0) throw ValidationError(where, "unknown rule id");
          node.rule_positions.push_back(static_cast<std::uint32_t>(pos));
          ops.insert(policy->rule_operation_code(pos));
        }
      }
      node.op_codes.assign(ops.begin(), ops.end());
    } else if (kind == "internal") {
      node.kind = TreeNode::Kind::Internal;
      const int attr = policy->attribute_index(jn.value("attribute", ""));
      if (attr < 0) throw ValidationError(where, "unknown attribute");
      node.attribute = attr;
      if (jn.contains("edges")) {
        for (auto it = jn["edges"].begin(); it != jn["edges"].end(); ++it) {
          const auto code = policy->value_code(attr, it.key());
          if (code == kUnknownCode || code == kWildcardCode)
            throw ValidationError(where, "bad edge value '" + it.key() + "'");
          node.edges.push_back({code, it.value().get<std::uint32_t>()});
        }
      }
      if (jn.contains("wildcard"))
        node.wildcard_child = jn["wildcard"].get<std::int32_t>();
      std::sort(node.edges.begin(), node.edges.end(),
                [&](const TreeNode::Edge& lhs, const TreeNode::Edge& rhs) {
                  return policy->value_token(attr, lhs.value) <
                         policy->value_token(attr, rhs.value);
                });
    } else {
      throw ValidationError(where, "kind must be 'internal' or 'leaf'");
    }
  }

  // Rebind parent links from the edge structure.
  for (auto& node : nodes) node.parent = -1;
  for (const auto& node : nodes) {
    for (const auto& edge : node.edges) {
      if (edge.child >= nodes.size())
        throw ValidationError("tree", "edge child out of range");
      nodes[edge.child].parent = static_cast<std::int32_t>(node.id);
    }
    if (node.wildcard_child >= 0) {
      if (static_cast<std::size_t>(node.wildcard_child) >= nodes.size())
        throw ValidationError("tree", "wildcard child out of range");
      nodes[node.wildcard_child].parent = static_cast<std::int32_t>(node.id);
    }
  }

  return PolicyTree(std::move(policy), std::move(nodes),
                    doc["root"].get<std::uint32_t>(), heuristic);
}

}  // namespace abacx
