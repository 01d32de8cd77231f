#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "abacx/datagen.hpp"
#include "abacx/feedback.hpp"
#include "abacx/tree.hpp"

namespace abacx {

// Actor used by benchmark feedback searches; visibility entries keyed on
// kAnyActor apply to it like to everyone else.
inline constexpr std::string_view kBenchActor = "requester";

struct MetricsReport {
  // Averaged over found cases only.
  double avg_cost = 0.0;
  double avg_depth = 0.0;
  double avg_changes = 0.0;
  // Averaged over all denied requests.
  double avg_time_ms = 0.0;
  double nodes_expanded = 0.0;
  double found_fraction = 0.0;
  int n_denied = 0;
  int n_found = 0;
  int n_queries = 0;
  std::size_t tree_node_count = 0;
  double tree_build_time_ms = 0.0;
};

// Builds the tree, evaluates n_queries from the dataset's request pool
// (cycling when the pool is shorter) and runs feedback_search on every
// denial. Throws std::invalid_argument when the pool is empty.
MetricsReport run_benchmark(const Dataset& dataset, SplitHeuristic heuristic,
                            SearchStrategy strategy, SearchLimits limits,
                            int n_queries, std::uint64_t seed);

inline const std::vector<int> kDefaultDepthGrid{3, 5, 10, 20, 30, 50, 75, 100};
inline const std::vector<int> kDefaultChangeGrid{1, 2, 3, 5, 10, 15, 20};

struct GridReport {
  struct Cell {
    int max_depth = 0;
    int max_changes = 0;
    MetricsReport metrics;
  };
  std::vector<Cell> cells;  // depth-major, matching the input grids
  std::pair<int, int> optimum{0, 0};  // (max_depth, max_changes)
};

// One feedback run per (max_depth, max_changes) cell over a fixed
// denied-request sample. The optimum maximizes found_fraction; ties prefer
// lower avg_changes, then lower avg_cost.
GridReport grid_search(const Dataset& dataset, SplitHeuristic heuristic,
                       SearchStrategy strategy,
                       const std::vector<int>& depth_grid,
                       const std::vector<int>& change_grid, std::uint64_t seed,
                       int denied_sample = 200);

struct SweepRow {
  double hidden_fraction = 0.0;
  double visibility_pct = 100.0;
  double found_pct = 0.0;   // relative to the requests findable at full visibility
  double avg_score = 0.0;   // average cost over found cases
  double avg_nodes = 0.0;
  double avg_time_ms = 0.0;
};

struct SweepReport {
  std::vector<SweepRow> rows;
};

// Hides a uniformly sampled fraction of the attribute-value predicates
// occurring in the policy, the same assignment for every actor, and reruns
// feedback over the fixed denied sample. Hidden sets are nested across
// fractions (prefixes of one random permutation), so rows stay comparable.
SweepReport visibility_sweep(const Dataset& dataset,
                             const std::vector<double>& hidden_fractions,
                             SearchStrategy strategy, SearchLimits limits,
                             std::uint64_t seed,
                             SplitHeuristic heuristic = SplitHeuristic::HighCostFirst,
                             int denied_sample = 200);

}  // namespace abacx
