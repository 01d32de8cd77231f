#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "abacx/abac.hpp"
#include "abacx/meta.hpp"

namespace abacx {

enum class SplitHeuristic {
  HighestEntropy,
  LowestEntropy,
  HighCostFirst,
  LowCostFirst,
  Random,
};

std::string_view to_string(SplitHeuristic heuristic);
std::optional<SplitHeuristic> heuristic_from_string(std::string_view text);

inline constexpr SplitHeuristic kAllHeuristics[] = {
    SplitHeuristic::HighestEntropy, SplitHeuristic::LowestEntropy,
    SplitHeuristic::HighCostFirst, SplitHeuristic::LowCostFirst,
    SplitHeuristic::Random};

struct TreeNode {
  enum class Kind { Internal, Leaf };

  struct Edge {
    std::int32_t value;  // domain value code or kUndefCode for a "#" edge
    std::uint32_t child;
  };

  std::uint32_t id = 0;
  Kind kind = Kind::Leaf;
  std::int32_t parent = -1;  // -1 at the root

  // Internal nodes: the tested attribute, value edges sorted by value token,
  // and an optional wildcard edge taken by rules unconstrained on the
  // attribute.
  std::int32_t attribute = -1;
  std::vector<Edge> edges;
  std::int32_t wildcard_child = -1;

  // Leaves: the rules consistent with the path and the union of their
  // operations.
  std::vector<std::uint32_t> rule_positions;
  std::vector<std::int32_t> op_codes;

  bool is_leaf() const { return kind == Kind::Leaf; }
  int branching() const {
    return static_cast<int>(edges.size()) + (wildcard_child >= 0 ? 1 : 0);
  }
};

// An n-ary policy decision tree: internal nodes test one attribute each,
// edges carry values or the wildcard, leaves hold rule sets. Immutable once
// built; safe for unlimited concurrent readers.
class PolicyTree {
 public:
  PolicyTree(std::shared_ptr<const Policy> policy, std::vector<TreeNode> nodes,
             std::uint32_t root, SplitHeuristic heuristic);

  const Policy& policy() const { return *policy_; }
  const std::shared_ptr<const Policy>& policy_ptr() const { return policy_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& node(std::uint32_t id) const { return nodes_.at(id); }
  std::uint32_t root() const { return root_; }
  SplitHeuristic heuristic() const { return heuristic_; }

  std::size_t node_count() const { return nodes_.size(); }
  int max_branching_factor() const { return max_branching_; }
  // Number of attributes eligible for splitting.
  int attribute_count() const;
  // Longest root-to-leaf path, in edges.
  int height() const { return height_; }

  std::vector<int> leaf_rule_ids(const TreeNode& node) const;

 private:
  std::shared_ptr<const Policy> policy_;
  std::vector<TreeNode> nodes_;
  std::uint32_t root_ = 0;
  SplitHeuristic heuristic_ = SplitHeuristic::HighestEntropy;
  int max_branching_ = 0;
  int height_ = 0;
};

// Shannon entropy over the nonzero classes of a count distribution,
// -sum p_c log2 p_c. Throws std::invalid_argument when all counts are zero.
double entropy(std::span<const std::uint64_t> class_counts);

// Entropy reduction achieved by partitioning `rule_ids` on the attribute's
// predicate values (wildcard/absent as one partition symbol, "#" as its own).
// Classes are the value distribution itself, so the gain equals the parent
// entropy whenever every partition is pure.
double information_gain(const Policy& policy, const std::vector<int>& rule_ids,
                        const std::string& attribute);

// Picks the next attribute to test. Entropy variants score by
// information gain, cost variants by the meta-policy's attribute cost,
// Random draws uniformly. Ties break lexicographically by attribute name.
std::string select_split_attribute(const Policy& policy,
                                   const std::vector<int>& rule_ids,
                                   const std::vector<std::string>& candidates,
                                   SplitHeuristic heuristic,
                                   const MetaPolicy& meta,
                                   std::mt19937_64& rng);

// Recursive construction over not-yet-used attributes. Stops on a leaf when
// no remaining rule constrains any unused attribute or when attributes are
// exhausted. Throws ValidationError when the policy carries relational
// predicates (the tree handles only equality and wildcard).
PolicyTree build_tree(const Policy& policy, SplitHeuristic heuristic,
                      const MetaPolicy& meta, std::mt19937_64& rng);

struct TreeValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

// Checks the structural criteria: distinct attributes per path, leaf rules
// consistent with their path predicates, every rule present in >= 1 leaf.
TreeValidationReport validate_tree(const PolicyTree& tree, const Policy& policy);

// Tree export format:
// {"root", "heuristic", "node_count",
//  "nodes": [{"id", "kind", "attribute"?, "edges"?, "wildcard"?,
//             "rule_ids"?, "ops"?}]}
std::string dump_tree(const PolicyTree& tree);
PolicyTree load_tree(const std::string& text, std::shared_ptr<const Policy> policy);

}  // namespace abacx
