#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "abacx/abac.hpp"
#include "abacx/tree.hpp"

namespace abacx {

struct EvalOutcome {
  Decision decision;
  // Node ids in visit order, including retraced subtrees.
  std::vector<std::uint32_t> visited_path;
  // Deepest node whose path predicates the request satisfies; present iff
  // the request is denied. Feedback search starts here.
  std::optional<std::uint32_t> deny_node;
  // Wildcard descents taken after a failed exact-value subtree.
  int retrace_count = 0;
};

// Top-down traversal: follow the edge matching the request's value for the
// tested attribute; when that subtree yields no allow, retrace to the node's
// wildcard edge. A reached leaf allows iff one of its rules matches the full
// request (operation included).
EvalOutcome evaluate(const PolicyTree& tree, const Request& request);
EvalOutcome evaluate(const PolicyTree& tree, const CompiledRequest& request);

// Deny node of a denied request; throws std::invalid_argument when the
// request is actually allowed.
std::uint32_t locate_deny_node(const PolicyTree& tree, const Request& request);

}  // namespace abacx
