#include "abacx/eval.hpp"

#include <algorithm>

namespace abacx {

namespace {

struct Traversal {
  const PolicyTree& tree;
  const Policy& policy;
  const CompiledRequest& request;
  EvalOutcome out;
  std::uint32_t deepest_node = 0;
  int deepest_depth = -1;

  // Returns true once an allow leaf is reached; the outcome decision is
  // filled at that leaf.
  bool descend(std::uint32_t id, int depth) {
    out.visited_path.push_back(id);
    if (depth > deepest_depth) {
      deepest_depth = depth;
      deepest_node = id;
    }

    const TreeNode& node = tree.node(id);
    if (node.is_leaf()) {
      for (auto pos : node.rule_positions) {
        if (!policy.matches(pos, request)) continue;
        const auto& rule = policy.rules()[pos];
        out.decision.matched_rule_ids.insert(rule.id);
        if (rule.operation == kWildcard) {
          if (request.operation >= 0)
            out.decision.granted_operations.insert(
                policy.operation_token(request.operation));
        } else {
          out.decision.granted_operations.insert(rule.operation);
        }
      }
      out.decision.allowed = !out.decision.matched_rule_ids.empty();
      return out.decision.allowed;
    }

    const auto rv = request.values[node.attribute];
    bool tried_exact = false;
    for (const auto& edge : node.edges) {
      if (edge.value != rv) continue;
      tried_exact = true;
      if (descend(edge.child, depth + 1)) return true;
      break;  // at most one exact edge matches
    }
    if (node.wildcard_child >= 0) {
      if (tried_exact) ++out.retrace_count;
      if (descend(static_cast<std::uint32_t>(node.wildcard_child), depth + 1))
        return true;
    }
    return false;
  }
};

}  // namespace

EvalOutcome evaluate(const PolicyTree& tree, const CompiledRequest& request) {
  Traversal traversal{tree, tree.policy(), request, {}, 0, -1};
  const bool allowed = traversal.descend(tree.root(), 0);
  EvalOutcome out = std::move(traversal.out);
  if (!allowed) {
    out.decision = Decision{};
    out.deny_node = traversal.deepest_node;
  }
  return out;
}

EvalOutcome evaluate(const PolicyTree& tree, const Request& request) {
  return evaluate(tree, tree.policy().compile(request));
}

std::uint32_t locate_deny_node(const PolicyTree& tree, const Request& request) {
  const auto outcome = evaluate(tree, request);
  if (outcome.decision.allowed)
    throw std::invalid_argument("locate_deny_node: request is allowed");
  return *outcome.deny_node;
}

}  // namespace abacx
