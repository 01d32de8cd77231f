#include "abacx/bench.hpp"

#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"

namespace abacx {
namespace {

Dataset healthcare() {
  return load_dataset_file(std::string(ABACX_DATA_DIR) + "/healthcare.json");
}

Dataset small_synthetic(int n_rules, int n_requests, std::uint64_t seed,
                        double allow_ratio = 0.7) {
  DatasetParams params = synthetic2_params();
  params.n_users = params.n_objects = 50;
  params.n_envs = 5;
  params.n_rules = n_rules;
  std::mt19937_64 rng(seed);
  Dataset dataset = generate_dataset(params, rng);
  dataset.requests = generate_requests(dataset, n_requests, allow_ratio, rng);
  return dataset;
}

TEST(RunBenchmark, HealthcareChangeFirstFindsEverything) {
  const Dataset dataset = healthcare();
  const auto report =
      run_benchmark(dataset, SplitHeuristic::HighCostFirst,
                    SearchStrategy::ChangeFirst, {5, 3},
                    static_cast<int>(dataset.requests.size()), 1);
  EXPECT_EQ(report.n_denied, 34);
  EXPECT_DOUBLE_EQ(report.found_fraction, 1.0);
  EXPECT_GT(report.tree_node_count, 0u);
}

TEST(RunBenchmark, AllAllowedPoolHasNoDenials) {
  Dataset dataset;
  dataset.policy = test::example_policy();
  dataset.meta = test::example_meta();
  Request allowed;
  allowed.assignments["role"] = "admin";
  allowed.operation = "access";
  dataset.requests = {allowed};

  const auto report = run_benchmark(dataset, SplitHeuristic::HighCostFirst,
                                    SearchStrategy::ChangeFirst, {5, 3}, 10, 1);
  EXPECT_EQ(report.n_denied, 0);
  EXPECT_EQ(report.n_found, 0);
  EXPECT_DOUBLE_EQ(report.found_fraction, 0.0);
  EXPECT_DOUBLE_EQ(report.avg_cost, 0.0);
}

TEST(RunBenchmark, EmptyPoolIsRejected) {
  Dataset dataset;
  dataset.policy = test::example_policy();
  dataset.meta = test::example_meta();
  EXPECT_THROW(run_benchmark(dataset, SplitHeuristic::HighCostFirst,
                             SearchStrategy::ChangeFirst, {5, 3}, 10, 1),
               std::invalid_argument);
}

TEST(RunBenchmark, ChangeAwareTreeExpandsFewerNodesThanEntropy) {
  const Dataset dataset = small_synthetic(400, 600, 77);
  const int n_queries = 400;
  const auto cheap =
      run_benchmark(dataset, SplitHeuristic::HighCostFirst,
                    SearchStrategy::ChangeFirst, {30, 8}, n_queries, 1);
  const auto expensive =
      run_benchmark(dataset, SplitHeuristic::HighestEntropy,
                    SearchStrategy::DepthBest, {30, 8}, n_queries, 1);
  EXPECT_GT(cheap.n_denied, 0);
  EXPECT_EQ(cheap.n_denied, expensive.n_denied);
  EXPECT_LT(cheap.nodes_expanded, expensive.nodes_expanded);
}

TEST(RunBenchmark, DecisionCountsAgreeAcrossHeuristics) {
  const Dataset dataset = small_synthetic(150, 400, 88);
  int denied = -1;
  for (auto heuristic : kAllHeuristics) {
    const auto report = run_benchmark(dataset, heuristic,
                                      SearchStrategy::ChangeFirst, {10, 4},
                                      400, 5);
    if (denied < 0) denied = report.n_denied;
    EXPECT_EQ(report.n_denied, denied) << to_string(heuristic);
  }
}

TEST(RunBenchmark, ChangeBestAndChangeFirstFindTheSameSet) {
  const Dataset dataset = small_synthetic(150, 400, 99);
  for (const SearchLimits limits : {SearchLimits{5, 2}, SearchLimits{20, 6}}) {
    const auto first = run_benchmark(dataset, SplitHeuristic::HighCostFirst,
                                     SearchStrategy::ChangeFirst, limits, 300, 3);
    const auto best = run_benchmark(dataset, SplitHeuristic::HighCostFirst,
                                    SearchStrategy::ChangeBest, limits, 300, 3);
    EXPECT_DOUBLE_EQ(first.found_fraction, best.found_fraction);
    if (best.n_found > 0) EXPECT_LE(best.avg_cost, first.avg_cost + 1e-9);
  }
}

TEST(RunBenchmark, NonTimingFieldsAreDeterministic) {
  const Dataset dataset = healthcare();
  const auto a = run_benchmark(dataset, SplitHeuristic::Random,
                               SearchStrategy::ChangeBest, {5, 3}, 75, 42);
  const auto b = run_benchmark(dataset, SplitHeuristic::Random,
                               SearchStrategy::ChangeBest, {5, 3}, 75, 42);
  EXPECT_DOUBLE_EQ(a.avg_cost, b.avg_cost);
  EXPECT_DOUBLE_EQ(a.found_fraction, b.found_fraction);
  EXPECT_DOUBLE_EQ(a.nodes_expanded, b.nodes_expanded);
  EXPECT_DOUBLE_EQ(a.avg_depth, b.avg_depth);
  EXPECT_DOUBLE_EQ(a.avg_changes, b.avg_changes);
  EXPECT_EQ(a.n_denied, b.n_denied);
  EXPECT_EQ(a.tree_node_count, b.tree_node_count);
}

TEST(GridSearch, SingleCellIsTheOptimum) {
  const Dataset dataset = healthcare();
  const auto report = grid_search(dataset, SplitHeuristic::HighCostFirst,
                                  SearchStrategy::ChangeFirst, {5}, {3}, 1);
  ASSERT_EQ(report.cells.size(), 1u);
  EXPECT_EQ(report.optimum, std::make_pair(5, 3));
}

TEST(GridSearch, HealthcareOptimumUsesSmallBudgets) {
  const Dataset dataset = healthcare();
  const auto report =
      grid_search(dataset, SplitHeuristic::HighCostFirst,
                  SearchStrategy::ChangeFirst, kDefaultDepthGrid,
                  kDefaultChangeGrid, 1);
  ASSERT_EQ(report.cells.size(),
            kDefaultDepthGrid.size() * kDefaultChangeGrid.size());
  // Full coverage is already reachable at (5, 3); the tie-breaks keep the
  // optimum at small budgets.
  EXPECT_LE(report.optimum.first, 10);
  EXPECT_LE(report.optimum.second, 3);

  double best_found = 0.0;
  for (const auto& cell : report.cells)
    best_found = std::max(best_found, cell.metrics.found_fraction);
  for (const auto& cell : report.cells) {
    if (cell.max_depth == report.optimum.first &&
        cell.max_changes == report.optimum.second)
      EXPECT_DOUBLE_EQ(cell.metrics.found_fraction, best_found);
  }
}

TEST(GridSearch, FoundFractionMonotoneAlongEachAxis) {
  const Dataset dataset = small_synthetic(120, 300, 111);
  const std::vector<int> depths{2, 4, 8, 16};
  const std::vector<int> changes{1, 2, 4, 8};
  const auto report = grid_search(dataset, SplitHeuristic::HighCostFirst,
                                  SearchStrategy::ChangeBest, depths, changes,
                                  1, 100);
  const auto cell_at = [&](int d, int c) -> const MetricsReport& {
    for (const auto& cell : report.cells)
      if (cell.max_depth == d && cell.max_changes == c) return cell.metrics;
    throw std::logic_error("missing cell");
  };
  for (std::size_t i = 0; i < depths.size(); ++i) {
    for (std::size_t j = 0; j < changes.size(); ++j) {
      if (i > 0)
        EXPECT_GE(cell_at(depths[i], changes[j]).found_fraction,
                  cell_at(depths[i - 1], changes[j]).found_fraction);
      if (j > 0)
        EXPECT_GE(cell_at(depths[i], changes[j]).found_fraction,
                  cell_at(depths[i], changes[j - 1]).found_fraction);
    }
  }
}

TEST(VisibilitySweep, EndpointsAndCostTrend) {
  const Dataset dataset = small_synthetic(200, 500, 222, 0.6);
  const auto report = visibility_sweep(dataset, {0.0, 0.5, 1.0},
                                       SearchStrategy::ChangeBest, {20, 6}, 7);
  ASSERT_EQ(report.rows.size(), 3u);
  EXPECT_DOUBLE_EQ(report.rows[0].found_pct, 100.0);
  EXPECT_DOUBLE_EQ(report.rows[2].found_pct, 0.0);
  EXPECT_GE(report.rows[1].found_pct, report.rows[2].found_pct);
  EXPECT_LE(report.rows[1].found_pct, report.rows[0].found_pct);
  if (report.rows[1].found_pct > 0)
    EXPECT_GE(report.rows[1].avg_score, report.rows[0].avg_score - 1e-9);
  EXPECT_DOUBLE_EQ(report.rows[0].visibility_pct, 100.0);
  EXPECT_DOUBLE_EQ(report.rows[2].visibility_pct, 0.0);
}

}  // namespace
}  // namespace abacx
