#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "abacx/abac.hpp"
#include "abacx/eval.hpp"
#include "abacx/meta.hpp"
#include "abacx/tree.hpp"

namespace abacx {

struct SearchLimits {
  int max_depth = 0;    // traversal distance from the deny node
  int max_changes = 0;  // attribute modifications in the feedback
};

enum class SearchStrategy { DepthFirst, DepthBest, ChangeFirst, ChangeBest };

std::string_view to_string(SearchStrategy strategy);
std::optional<SearchStrategy> strategy_from_string(std::string_view text);

inline constexpr SearchStrategy kAllStrategies[] = {
    SearchStrategy::DepthFirst, SearchStrategy::DepthBest,
    SearchStrategy::ChangeFirst, SearchStrategy::ChangeBest};

// The attribute modifications a requester must adopt, mapped to the new
// values, with the summed scalar cost.
struct ChangeSet {
  std::map<std::string, std::string> changes;
  double total_cost = 0.0;
};

struct FeedbackResult {
  bool found = false;
  std::optional<ChangeSet> change_set;
  std::int64_t nodes_expanded = 0;
  int solution_depth = 0;
  std::chrono::microseconds elapsed{0};
};

// Bounded search around the deny node, over the tree viewed as a graph.
// Moves toward the parent relax constraints at no cost; moves toward children
// accumulate change_cost[a] whenever the edge value differs from the
// request's. An attribute hidden from `actor` blocks all of its edges; a
// hidden attribute-value pair blocks proposing that value as a change.
// Depth strategies run a stack, change strategies a min-cost priority queue;
// *First variants return on the first allow leaf, *Best variants keep the
// minimum-cost one. Throws std::invalid_argument when the request is not
// denied.
FeedbackResult feedback_search(const PolicyTree& tree, const MetaPolicy& meta,
                               const Request& request, const std::string& actor,
                               SearchStrategy strategy, SearchLimits limits);

// Copy of `request` with each changed attribute overwritten; values are
// validated against the schema.
Request apply_changes(const Policy& policy, const Request& request,
                      const ChangeSet& change_set);

// Brute-force reference: enumerates every change set of at most max_changes
// visible attributes over all domain values and returns the cheapest one the
// oracle decides allow (ties: fewest changes, then lexicographic). Returns
// std::nullopt when no change set works. Guarded against enumerations above
// 10^6 states.
std::optional<ChangeSet> oracle_min_feedback(const Policy& policy,
                                             const MetaPolicy& meta,
                                             const Request& request,
                                             const std::string& actor,
                                             int max_changes);

}  // namespace abacx
