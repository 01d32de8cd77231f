#include "abacx/feedback.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <queue>
#include <vector>

namespace abacx {

std::string_view to_string(SearchStrategy strategy) {
  switch (strategy) {
    case SearchStrategy::DepthFirst: return "depth_first";
    case SearchStrategy::DepthBest: return "depth_best";
    case SearchStrategy::ChangeFirst: return "change_first";
    case SearchStrategy::ChangeBest: return "change_best";
  }
  return "depth_first";
}

std::optional<SearchStrategy> strategy_from_string(std::string_view text) {
  if (text == "depth_first") return SearchStrategy::DepthFirst;
  if (text == "depth_best") return SearchStrategy::DepthBest;
  if (text == "change_first") return SearchStrategy::ChangeFirst;
  if (text == "change_best") return SearchStrategy::ChangeBest;
  return std::nullopt;
}

namespace {

// One change along the walk: attribute index and the edge's value code.
struct Change {
  std::int32_t attribute;
  std::int32_t value;
};

struct Entry {
  std::uint32_t node;
  double cost;
  int depth;
  std::vector<Change> changes;
};

// Priority-queue order: (cost, depth, node id) ascending.
struct EntryAfter {
  bool operator()(const Entry& lhs, const Entry& rhs) const {
    if (lhs.cost != rhs.cost) return lhs.cost > rhs.cost;
    if (lhs.depth != rhs.depth) return lhs.depth > rhs.depth;
    return lhs.node > rhs.node;
  }
};

class Frontier {
 public:
  explicit Frontier(bool ordered_by_cost) : by_cost_(ordered_by_cost) {}

  void push(Entry entry) {
    if (by_cost_)
      queue_.push(std::move(entry));
    else
      stack_.push_back(std::move(entry));
  }

  bool empty() const { return by_cost_ ? queue_.empty() : stack_.empty(); }

  Entry pop() {
    if (by_cost_) {
      Entry entry = queue_.top();
      queue_.pop();
      return entry;
    }
    Entry entry = std::move(stack_.back());
    stack_.pop_back();
    return entry;
  }

 private:
  bool by_cost_;
  std::vector<Entry> stack_;
  std::priority_queue<Entry, std::vector<Entry>, EntryAfter> queue_;
};

bool leaf_allows(const PolicyTree& tree, const TreeNode& leaf,
                 const CompiledRequest& request,
                 const std::vector<Change>& changes) {
  CompiledRequest modified = request;
  for (const auto& change : changes) modified.values[change.attribute] = change.value;
  const auto& policy = tree.policy();
  for (auto pos : leaf.rule_positions)
    if (policy.matches(pos, modified)) return true;
  return false;
}

ChangeSet to_change_set(const PolicyTree& tree,
                        const std::vector<Change>& changes, double cost) {
  const auto& policy = tree.policy();
  ChangeSet out;
  out.total_cost = cost;
  for (const auto& change : changes)
    out.changes[policy.attribute(change.attribute).name] =
        policy.value_token(change.attribute, change.value);
  return out;
}

}  // namespace

FeedbackResult feedback_search(const PolicyTree& tree, const MetaPolicy& meta,
                               const Request& request, const std::string& actor,
                               SearchStrategy strategy, SearchLimits limits) {
  const auto start = std::chrono::steady_clock::now();
  const auto& policy = tree.policy();
  const CompiledRequest creq = policy.compile(request);

  const EvalOutcome outcome = evaluate(tree, creq);
  if (outcome.decision.allowed)
    throw std::invalid_argument("feedback_search: request is not denied");

  const bool first_hit_returns = strategy == SearchStrategy::DepthFirst ||
                                 strategy == SearchStrategy::ChangeFirst;
  const bool by_cost = strategy == SearchStrategy::ChangeFirst ||
                       strategy == SearchStrategy::ChangeBest;

  FeedbackResult result;
  Frontier frontier(by_cost);
  frontier.push({*outcome.deny_node, 0.0, 0, {}});
  std::vector<bool> visited(tree.node_count(), false);

  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<Change> best_changes;
  int best_depth = 0;

  const auto finish = [&](FeedbackResult r) {
    r.elapsed = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::steady_clock::now() - start);
    return r;
  };

  while (!frontier.empty()) {
    Entry entry = frontier.pop();
    if (visited[entry.node]) continue;
    visited[entry.node] = true;
    if (entry.depth > limits.max_depth ||
        static_cast<int>(entry.changes.size()) > limits.max_changes)
      continue;
    ++result.nodes_expanded;

    const TreeNode& node = tree.node(entry.node);
    if (node.is_leaf() && leaf_allows(tree, node, creq, entry.changes)) {
      if (first_hit_returns) {
        result.found = true;
        result.change_set = to_change_set(tree, entry.changes, entry.cost);
        result.solution_depth = entry.depth;
        return finish(std::move(result));
      }
      if (entry.cost < best_cost) {
        best_cost = entry.cost;
        best_changes = entry.changes;
        best_depth = entry.depth;
      }
    }

    // Constraint relaxation: toward the parent, no cost added.
    if (node.parent >= 0)
      frontier.push({static_cast<std::uint32_t>(node.parent), entry.cost,
                     entry.depth + 1, entry.changes});

    if (node.is_leaf()) continue;
    const auto& attr_name = policy.attribute(node.attribute).name;
    const auto rv = creq.values[node.attribute];
    const bool attr_visible = meta.visible(attr_name, actor);

    // Constraint addition: toward children. The wildcard edge is pushed
    // first and concrete edges in reverse token order, so the stack pops
    // concrete values lexicographically before the wildcard. A hidden
    // attribute blocks all of its edges; a hidden attribute-value pair
    // blocks only proposing that value as a change.
    if (node.wildcard_child >= 0 &&
        meta.visible(attr_name, std::string(kWildcard), actor)) {
      frontier.push({static_cast<std::uint32_t>(node.wildcard_child),
                     entry.cost, entry.depth + 1, entry.changes});
    }
    for (auto it = node.edges.rbegin(); it != node.edges.rend(); ++it) {
      const auto& edge = *it;
      if (edge.value == rv) {
        if (!attr_visible) continue;
        frontier.push({edge.child, entry.cost, entry.depth + 1, entry.changes});
        continue;
      }
      // A "#" edge needs the attribute unset; unsetting is not an
      // actionable change.
      if (edge.value == kUndefCode) continue;
      const auto& edge_token = policy.value_token(node.attribute, edge.value);
      if (!meta.visible(attr_name, edge_token, actor)) continue;
      const double cost =
          entry.cost + meta.change_cost(attr_name,
                                        policy.value_token(node.attribute, rv),
                                        edge_token);
      auto changes = entry.changes;
      changes.push_back({node.attribute, edge.value});
      frontier.push({edge.child, cost, entry.depth + 1, std::move(changes)});
    }
  }

  if (best_cost < std::numeric_limits<double>::infinity()) {
    result.found = true;
    result.change_set = to_change_set(tree, best_changes, best_cost);
    result.solution_depth = best_depth;
  }
  return finish(std::move(result));
}

Request apply_changes(const Policy& policy, const Request& request,
                      const ChangeSet& change_set) {
  Request out = request;
  for (const auto& [attr_name, value] : change_set.changes) {
    const int a = policy.attribute_index(attr_name);
    if (a < 0)
      throw ValidationError("changes." + attr_name, "unknown attribute");
    if (policy.value_code(a, value) < 0)
      throw ValidationError("changes." + attr_name,
                            "value '" + value + "' outside domain");
    out.assignments[attr_name] = value;
  }
  return out;
}

std::optional<ChangeSet> oracle_min_feedback(const Policy& policy,
                                             const MetaPolicy& meta,
                                             const Request& request,
                                             const std::string& actor,
                                             int max_changes) {
  const CompiledRequest creq = policy.compile(request);
  if (oracle_decide(policy, creq).allowed) return ChangeSet{};

  // Candidate new values per visible attribute, excluding the current value
  // and any value hidden from the actor.
  struct Candidate {
    std::int32_t attribute;
    std::vector<std::int32_t> values;
  };
  std::vector<Candidate> candidates;
  std::vector<int> order(policy.splittable_attributes());
  std::sort(order.begin(), order.end(), [&](int lhs, int rhs) {
    return policy.attribute(lhs).name < policy.attribute(rhs).name;
  });
  for (int a : order) {
    const auto& attr = policy.attribute(a);
    if (!meta.visible(attr.name, actor)) continue;
    Candidate candidate{a, {}};
    for (std::size_t v = 0; v < attr.domain.size(); ++v) {
      const auto code = static_cast<std::int32_t>(v);
      if (code == creq.values[a]) continue;
      if (!meta.visible(attr.name, attr.domain[v], actor)) continue;
      candidate.values.push_back(code);
    }
    if (!candidate.values.empty()) candidates.push_back(std::move(candidate));
  }

  constexpr std::uint64_t kGuard = 1'000'000;
  std::uint64_t enumerated = 0;

  struct Best {
    double cost;
    std::vector<std::pair<std::int32_t, std::int32_t>> changes;
  };
  std::optional<Best> best;

  std::vector<std::pair<std::int32_t, std::int32_t>> current;
  CompiledRequest modified = creq;

  const auto as_tokens =
      [&](const std::vector<std::pair<std::int32_t, std::int32_t>>& changes) {
        std::vector<std::pair<std::string, std::string>> out;
        out.reserve(changes.size());
        for (const auto& [a, v] : changes)
          out.emplace_back(policy.attribute(a).name, policy.value_token(a, v));
        return out;
      };
  const auto better = [&](double cost) {
    if (!best) return true;
    if (cost != best->cost) return cost < best->cost;
    if (current.size() != best->changes.size())
      return current.size() < best->changes.size();
    const auto lhs = as_tokens(current);
    const auto rhs = as_tokens(best->changes);
    return std::lexicographical_compare(lhs.begin(), lhs.end(), rhs.begin(),
                                        rhs.end());
  };

  // Depth-first enumeration of attribute subsets (in name order) and their
  // value assignments.
  const std::function<void(std::size_t, double)> recurse =
      [&](std::size_t next, double cost) {
        if (++enumerated > kGuard)
          throw std::invalid_argument("oracle_min_feedback: enumeration guard "
                                      "exceeded");
        if (!current.empty() && oracle_decide(policy, modified).allowed &&
            better(cost)) {
          best = Best{cost, current};
        }
        if (static_cast<int>(current.size()) >= max_changes) return;
        for (std::size_t i = next; i < candidates.size(); ++i) {
          const auto& candidate = candidates[i];
          const auto& attr = policy.attribute(candidate.attribute);
          const auto saved = modified.values[candidate.attribute];
          for (const auto value : candidate.values) {
            modified.values[candidate.attribute] = value;
            current.emplace_back(candidate.attribute, value);
            recurse(i + 1,
                    cost + meta.change_cost(
                               attr.name,
                               policy.value_token(candidate.attribute, saved),
                               policy.value_token(candidate.attribute, value)));
            current.pop_back();
          }
          modified.values[candidate.attribute] = saved;
        }
      };
  recurse(0, 0.0);

  if (!best) return std::nullopt;
  ChangeSet out;
  out.total_cost = best->cost;
  for (const auto& [a, v] : best->changes)
    out.changes[policy.attribute(a).name] = policy.value_token(a, v);
  return out;
}

}  // namespace abacx
