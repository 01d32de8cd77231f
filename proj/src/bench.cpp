#include "abacx/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include "abacx/eval.hpp"

namespace abacx {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Runs feedback over a fixed denied set and aggregates the six per-run
// statistics. Cost, depth and change counts average over found cases only;
// node and time figures over every search.
MetricsReport feedback_suite(const PolicyTree& tree, const MetaPolicy& meta,
                             const std::vector<Request>& denied,
                             SearchStrategy strategy, SearchLimits limits) {
  MetricsReport report;
  report.n_denied = static_cast<int>(denied.size());
  double sum_cost = 0, sum_depth = 0, sum_changes = 0, sum_nodes = 0, sum_ms = 0;
  for (const auto& request : denied) {
    const auto fb = feedback_search(tree, meta, request, std::string(kBenchActor),
                                    strategy, limits);
    sum_nodes += static_cast<double>(fb.nodes_expanded);
    sum_ms += static_cast<double>(fb.elapsed.count()) / 1000.0;
    if (fb.found) {
      ++report.n_found;
      sum_cost += fb.change_set->total_cost;
      sum_depth += fb.solution_depth;
      sum_changes += static_cast<double>(fb.change_set->changes.size());
    }
  }
  if (report.n_denied > 0) {
    report.found_fraction =
        static_cast<double>(report.n_found) / report.n_denied;
    report.nodes_expanded = sum_nodes / report.n_denied;
    report.avg_time_ms = sum_ms / report.n_denied;
  }
  if (report.n_found > 0) {
    report.avg_cost = sum_cost / report.n_found;
    report.avg_depth = sum_depth / report.n_found;
    report.avg_changes = sum_changes / report.n_found;
  }
  return report;
}

std::vector<Request> denied_sample_of(const PolicyTree& tree,
                                      const Dataset& dataset, int cap) {
  std::vector<Request> denied;
  for (const auto& request : dataset.requests) {
    if (cap > 0 && static_cast<int>(denied.size()) >= cap) break;
    if (!evaluate(tree, request).decision.allowed) denied.push_back(request);
  }
  return denied;
}

}  // namespace

MetricsReport run_benchmark(const Dataset& dataset, SplitHeuristic heuristic,
                            SearchStrategy strategy, SearchLimits limits,
                            int n_queries, std::uint64_t seed) {
  if (n_queries <= 0)
    throw std::invalid_argument("run_benchmark: n_queries must be positive");
  if (dataset.requests.empty())
    throw std::invalid_argument("run_benchmark: dataset has no request pool");

  std::mt19937_64 rng(seed);
  const auto build_start = Clock::now();
  const PolicyTree tree = build_tree(dataset.policy, heuristic, dataset.meta, rng);
  const double build_ms = ms_since(build_start);

  std::vector<Request> denied;
  for (int i = 0; i < n_queries; ++i) {
    const auto& request = dataset.requests[i % dataset.requests.size()];
    if (!evaluate(tree, request).decision.allowed) denied.push_back(request);
  }

  MetricsReport report = feedback_suite(tree, dataset.meta, denied, strategy, limits);
  report.n_queries = n_queries;
  report.tree_node_count = tree.node_count();
  report.tree_build_time_ms = build_ms;
  return report;
}

GridReport grid_search(const Dataset& dataset, SplitHeuristic heuristic,
                       SearchStrategy strategy,
                       const std::vector<int>& depth_grid,
                       const std::vector<int>& change_grid, std::uint64_t seed,
                       int denied_sample) {
  if (depth_grid.empty() || change_grid.empty())
    throw std::invalid_argument("grid_search: empty grid");

  std::mt19937_64 rng(seed);
  const auto build_start = Clock::now();
  const PolicyTree tree = build_tree(dataset.policy, heuristic, dataset.meta, rng);
  const double build_ms = ms_since(build_start);
  const auto denied = denied_sample_of(tree, dataset, denied_sample);

  GridReport report;
  bool have_best = false;
  MetricsReport best;
  for (int depth : depth_grid) {
    for (int changes : change_grid) {
      MetricsReport cell = feedback_suite(tree, dataset.meta, denied, strategy,
                                          {depth, changes});
      cell.tree_node_count = tree.node_count();
      cell.tree_build_time_ms = build_ms;
      const bool improves =
          !have_best || cell.found_fraction > best.found_fraction ||
          (cell.found_fraction == best.found_fraction &&
           (cell.avg_changes < best.avg_changes ||
            (cell.avg_changes == best.avg_changes &&
             cell.avg_cost < best.avg_cost)));
      if (improves) {
        have_best = true;
        best = cell;
        report.optimum = {depth, changes};
      }
      report.cells.push_back({depth, changes, std::move(cell)});
    }
  }
  return report;
}

SweepReport visibility_sweep(const Dataset& dataset,
                             const std::vector<double>& hidden_fractions,
                             SearchStrategy strategy, SearchLimits limits,
                             std::uint64_t seed, SplitHeuristic heuristic,
                             int denied_sample) {
  for (double f : hidden_fractions)
    if (f < 0.0 || f > 1.0)
      throw std::invalid_argument("visibility_sweep: fractions in [0,1]");

  std::mt19937_64 rng(seed);
  const PolicyTree tree = build_tree(dataset.policy, heuristic, dataset.meta, rng);
  const auto denied = denied_sample_of(tree, dataset, denied_sample);

  // The attribute-value predicates occurring in the policy, one shuffled
  // permutation; each fraction hides a prefix so hidden sets nest.
  std::set<std::pair<std::string, std::string>> pair_set;
  for (const auto& rule : dataset.policy.rules()) {
    for (const auto& [attr_name, pred] : rule.predicates) {
      if (pred.value == kWildcard) continue;
      pair_set.emplace(attr_name, pred.value);
    }
  }
  std::vector<std::pair<std::string, std::string>> universe(pair_set.begin(),
                                                            pair_set.end());
  std::shuffle(universe.begin(), universe.end(), rng);

  // Restrict the sweep to requests findable at full visibility.
  std::vector<Request> baseline;
  for (const auto& request : denied) {
    const auto fb = feedback_search(tree, dataset.meta, request,
                                    std::string(kBenchActor), strategy, limits);
    if (fb.found) baseline.push_back(request);
  }

  SweepReport report;
  for (double fraction : hidden_fractions) {
    const auto hide_count = static_cast<std::size_t>(
        std::lround(fraction * static_cast<double>(universe.size())));
    MetaPolicy meta = dataset.meta;
    for (std::size_t i = 0; i < hide_count && i < universe.size(); ++i)
      meta.set_visibility(universe[i].first, universe[i].second,
                          std::string(kAnyActor), false);

    const MetricsReport metrics =
        feedback_suite(tree, meta, baseline, strategy, limits);
    SweepRow row;
    row.hidden_fraction = fraction;
    row.visibility_pct = 100.0 * (1.0 - fraction);
    row.found_pct = baseline.empty() ? 0.0 : 100.0 * metrics.found_fraction;
    row.avg_score = metrics.avg_cost;
    row.avg_nodes = metrics.nodes_expanded;
    row.avg_time_ms = metrics.avg_time_ms;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace abacx
