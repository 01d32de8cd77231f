// Command-line front end: dataset generation, tree construction, request
// evaluation, denial explanation and the benchmark/grid/sweep harnesses.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "abacx/bench.hpp"
#include "abacx/datagen.hpp"
#include "abacx/eval.hpp"
#include "abacx/feedback.hpp"

namespace {

using abacx::Dataset;
using abacx::MetricsReport;
using abacx::Request;
using abacx::SearchLimits;
using abacx::SearchStrategy;
using abacx::SplitHeuristic;
using abacx::ValidationError;
using ordered_json = nlohmann::ordered_json;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path, "cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw ValidationError(path, "cannot open file for writing");
  out << content;
  if (content.empty() || content.back() != '\n') out << '\n';
}

SplitHeuristic parse_heuristic(const std::string& text) {
  const auto h = abacx::heuristic_from_string(text);
  if (!h)
    throw CLI::ValidationError("--heuristic",
                               "unknown heuristic '" + text + "'");
  return *h;
}

SearchStrategy parse_strategy(const std::string& text) {
  const auto s = abacx::strategy_from_string(text);
  if (!s)
    throw CLI::ValidationError("--strategy", "unknown strategy '" + text + "'");
  return *s;
}

std::vector<int> parse_int_list(const std::string& text, const char* flag) {
  std::vector<int> out;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw CLI::ValidationError(flag, "expected a comma-separated integer list");
    }
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& text, const char* flag) {
  std::vector<double> out;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw CLI::ValidationError(flag, "expected a comma-separated number list");
    }
  }
  return out;
}

std::string fmt(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.4f", value);
  return buffer;
}

ordered_json metrics_to_json(const MetricsReport& report) {
  ordered_json doc;
  doc["n_queries"] = report.n_queries;
  doc["n_denied"] = report.n_denied;
  doc["n_found"] = report.n_found;
  doc["found_fraction"] = report.found_fraction;
  doc["avg_cost"] = report.avg_cost;
  doc["avg_time_ms"] = report.avg_time_ms;
  doc["nodes_expanded"] = report.nodes_expanded;
  doc["avg_depth"] = report.avg_depth;
  doc["avg_changes"] = report.avg_changes;
  doc["tree_node_count"] = report.tree_node_count;
  doc["tree_build_time_ms"] = report.tree_build_time_ms;
  return doc;
}

// The dataset params file uses the same field names as the summary table:
// n_u, n_o, n_e, u_a, o_a, e_a, nv_u, nv_o, nv_e, n_p, n_ops.
abacx::DatasetParams params_from_file(const std::string& path) {
  const auto doc = nlohmann::json::parse(read_file(path));
  abacx::DatasetParams params;
  params.n_users = doc.value("n_u", 0);
  params.n_objects = doc.value("n_o", 0);
  params.n_envs = doc.value("n_e", 0);
  params.user_attrs = doc.value("u_a", 0);
  params.object_attrs = doc.value("o_a", 0);
  params.env_attrs = doc.value("e_a", 0);
  params.user_values = doc.value("nv_u", 0);
  params.object_values = doc.value("nv_o", 0);
  params.env_values = doc.value("nv_e", 0);
  params.n_rules = doc.value("n_p", 0);
  params.n_operations = doc.value("n_ops", 0);
  params.wildcard_fraction = doc.value("wildcard_fraction", 0.4);
  params.target_allow_ratio = doc.value("target_allow_ratio", 0.7);
  params.seed = doc.value("seed", 0);
  return params;
}

struct GlobalOptions {
  std::uint64_t seed = 0;
  std::string format;  // json | csv | text; per-command default when empty
};

std::string format_or(const GlobalOptions& options, const char* fallback) {
  return options.format.empty() ? fallback : options.format;
}

int run_gen(const GlobalOptions& options, const std::string& preset,
            const std::string& params_file, abacx::DatasetParams params,
            int n_requests, const std::string& out_path) {
  if (!params_file.empty()) {
    params = params_from_file(params_file);
  } else if (preset == "synthetic1" || preset == "synthetic2") {
    const double wildcard = params.wildcard_fraction;
    const double ratio = params.target_allow_ratio;
    params = preset == "synthetic1" ? abacx::synthetic1_params()
                                    : abacx::synthetic2_params();
    params.wildcard_fraction = wildcard;
    params.target_allow_ratio = ratio;
  } else if (!preset.empty()) {
    throw CLI::ValidationError("--preset", "expected synthetic1 or synthetic2");
  }
  params.seed = options.seed;

  std::mt19937_64 rng(params.seed);
  Dataset dataset = abacx::generate_dataset(params, rng);
  dataset.requests = abacx::generate_requests(dataset, n_requests,
                                              params.target_allow_ratio, rng);
  abacx::save_dataset_file(dataset, out_path);

  int allowed = 0;
  for (const auto& request : dataset.requests)
    if (abacx::oracle_decide(dataset.policy, request).allowed) ++allowed;
  std::cout << "wrote " << out_path << ": " << dataset.policy.rule_count()
            << " rules, " << dataset.policy.attribute_count() << " attributes, "
            << dataset.requests.size() << " requests (" << allowed
            << " allowed)\n";
  return 0;
}

int run_build(const GlobalOptions& options, const std::string& dataset_path,
              const std::string& heuristic_text, const std::string& dump_path) {
  const Dataset dataset = abacx::load_dataset_file(dataset_path);
  std::mt19937_64 rng(options.seed);
  const auto start = std::chrono::steady_clock::now();
  const abacx::PolicyTree tree =
      abacx::build_tree(dataset.policy, parse_heuristic(heuristic_text),
                        dataset.meta, rng);
  const double build_ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - start)
                              .count();
  if (!dump_path.empty()) write_file(dump_path, abacx::dump_tree(tree));

  if (format_or(options, "text") == "json") {
    ordered_json doc;
    doc["heuristic"] = std::string(to_string(tree.heuristic()));
    doc["node_count"] = tree.node_count();
    doc["height"] = tree.height();
    doc["max_branching_factor"] = tree.max_branching_factor();
    doc["build_time_ms"] = build_ms;
    std::cout << doc.dump(2) << "\n";
  } else {
    std::cout << "tree: " << tree.node_count() << " nodes, height "
              << tree.height() << ", max branching "
              << tree.max_branching_factor() << ", built in " << fmt(build_ms)
              << " ms\n";
    if (!dump_path.empty()) std::cout << "dump written to " << dump_path << "\n";
  }
  return 0;
}

int run_eval(const GlobalOptions& options, const std::string& dataset_path,
             const std::string& tree_path, const std::string& heuristic_text,
             const std::string& request_path) {
  const Dataset dataset = abacx::load_dataset_file(dataset_path);
  const Request request = abacx::parse_request(read_file(request_path));

  auto policy = std::make_shared<const abacx::Policy>(dataset.policy);
  std::mt19937_64 rng(options.seed);
  const abacx::PolicyTree tree =
      tree_path.empty()
          ? abacx::build_tree(dataset.policy, parse_heuristic(heuristic_text),
                              dataset.meta, rng)
          : abacx::load_tree(read_file(tree_path), policy);

  const auto outcome = abacx::evaluate(tree, request);
  if (format_or(options, "json") == "text") {
    std::cout << (outcome.decision.allowed ? "allow" : "deny");
    if (outcome.decision.allowed) {
      std::cout << " (rules:";
      for (int id : outcome.decision.matched_rule_ids) std::cout << " " << id;
      std::cout << ")";
    }
    std::cout << "\n";
  } else {
    ordered_json doc;
    doc["outcome"] = outcome.decision.allowed ? "allow" : "deny";
    doc["granted_operations"] = outcome.decision.granted_operations;
    doc["matched_rule_ids"] = outcome.decision.matched_rule_ids;
    if (outcome.deny_node) doc["deny_node"] = *outcome.deny_node;
    std::cout << doc.dump(2) << "\n";
  }
  return 0;
}

int run_explain(const GlobalOptions& options, const std::string& dataset_path,
                const std::string& request_path, const std::string& strategy_text,
                int max_depth, int max_changes, const std::string& actor,
                const std::string& heuristic_text) {
  const Dataset dataset = abacx::load_dataset_file(dataset_path);
  const Request request = abacx::parse_request(read_file(request_path));
  std::mt19937_64 rng(options.seed);
  const abacx::PolicyTree tree = abacx::build_tree(
      dataset.policy, parse_heuristic(heuristic_text), dataset.meta, rng);

  if (abacx::evaluate(tree, request).decision.allowed) {
    std::cout << "request is allowed; nothing to explain\n";
    return 0;
  }

  const auto result = abacx::feedback_search(
      tree, dataset.meta, request, actor, parse_strategy(strategy_text),
      SearchLimits{max_depth, max_changes});

  const auto change_cost = [&](const std::string& attr, const std::string& to) {
    return dataset.meta.change_cost(attr, request.value_of(attr), to);
  };

  if (format_or(options, "text") == "json") {
    ordered_json doc;
    doc["found"] = result.found;
    doc["changes"] = ordered_json::array();
    if (result.found) {
      for (const auto& [attr, to] : result.change_set->changes)
        doc["changes"].push_back(
            {{"attr", attr}, {"to", to}, {"cost", change_cost(attr, to)}});
      doc["total_cost"] = result.change_set->total_cost;
    }
    doc["nodes_expanded"] = result.nodes_expanded;
    doc["depth"] = result.solution_depth;
    std::cout << doc.dump(2) << "\n";
  } else if (!result.found) {
    std::cout << "no feedback found within max_depth=" << max_depth
              << ", max_changes=" << max_changes << " (" << result.nodes_expanded
              << " nodes expanded)\n";
  } else {
    for (const auto& [attr, to] : result.change_set->changes) {
      char line[160];
      std::snprintf(line, sizeof(line), "set %s = %s (cost %g)", attr.c_str(),
                    to.c_str(), change_cost(attr, to));
      std::cout << line << "\n";
    }
    std::cout << "total cost: " << result.change_set->total_cost << "\n";
  }
  return 0;
}

int run_bench(const GlobalOptions& options, const std::string& dataset_path,
              const std::string& heuristic_text, const std::string& strategy_text,
              int max_depth, int max_changes, int n_queries) {
  const Dataset dataset = abacx::load_dataset_file(dataset_path);
  const auto report = abacx::run_benchmark(
      dataset, parse_heuristic(heuristic_text), parse_strategy(strategy_text),
      SearchLimits{max_depth, max_changes}, n_queries, options.seed);

  const std::string format = format_or(options, "csv");
  if (format == "json") {
    ordered_json doc = metrics_to_json(report);
    doc["heuristic"] = heuristic_text;
    doc["strategy"] = strategy_text;
    std::cout << doc.dump(2) << "\n";
  } else if (format == "text") {
    std::cout << "queries " << report.n_queries << ", denied " << report.n_denied
              << ", found " << fmt(report.found_fraction * 100) << "%\n"
              << "avg cost " << fmt(report.avg_cost) << ", avg time "
              << fmt(report.avg_time_ms) << " ms, nodes expanded "
              << fmt(report.nodes_expanded) << "\n"
              << "avg depth " << fmt(report.avg_depth) << ", avg changes "
              << fmt(report.avg_changes) << ", tree nodes "
              << report.tree_node_count << " (built in "
              << fmt(report.tree_build_time_ms) << " ms)\n";
  } else {
    std::cout << "heuristic,strategy,max_depth,max_changes,n_queries,n_denied,"
                 "found_fraction,avg_cost,avg_time_ms,nodes_expanded,avg_depth,"
                 "avg_changes,tree_nodes,tree_build_ms\n";
    std::cout << heuristic_text << "," << strategy_text << "," << max_depth
              << "," << max_changes << "," << report.n_queries << ","
              << report.n_denied << "," << fmt(report.found_fraction) << ","
              << fmt(report.avg_cost) << "," << fmt(report.avg_time_ms) << ","
              << fmt(report.nodes_expanded) << "," << fmt(report.avg_depth)
              << "," << fmt(report.avg_changes) << "," << report.tree_node_count
              << "," << fmt(report.tree_build_time_ms) << "\n";
  }
  return 0;
}

int run_grid(const GlobalOptions& options, const std::string& dataset_path,
             const std::string& heuristic_text, const std::string& strategy_text,
             const std::string& depth_list, const std::string& change_list,
             int denied_sample) {
  const Dataset dataset = abacx::load_dataset_file(dataset_path);
  const auto depth_grid = parse_int_list(depth_list, "--depth-grid");
  const auto change_grid = parse_int_list(change_list, "--changes-grid");
  const auto report = abacx::grid_search(
      dataset, parse_heuristic(heuristic_text), parse_strategy(strategy_text),
      depth_grid, change_grid, options.seed, denied_sample);

  if (format_or(options, "csv") == "json") {
    ordered_json doc;
    doc["optimum"] = {{"max_depth", report.optimum.first},
                      {"max_changes", report.optimum.second}};
    doc["cells"] = ordered_json::array();
    for (const auto& cell : report.cells) {
      ordered_json jc = metrics_to_json(cell.metrics);
      jc["max_depth"] = cell.max_depth;
      jc["max_changes"] = cell.max_changes;
      doc["cells"].push_back(std::move(jc));
    }
    std::cout << doc.dump(2) << "\n";
  } else {
    std::cout << "max_depth,max_changes,avg_cost,avg_time_ms,found_fraction,"
                 "nodes_expanded,avg_depth,avg_changes\n";
    for (const auto& cell : report.cells) {
      std::cout << cell.max_depth << "," << cell.max_changes << ","
                << fmt(cell.metrics.avg_cost) << ","
                << fmt(cell.metrics.avg_time_ms) << ","
                << fmt(cell.metrics.found_fraction) << ","
                << fmt(cell.metrics.nodes_expanded) << ","
                << fmt(cell.metrics.avg_depth) << ","
                << fmt(cell.metrics.avg_changes) << "\n";
    }
    std::cerr << "optimum: max_depth=" << report.optimum.first
              << " max_changes=" << report.optimum.second << "\n";
  }
  return 0;
}

int run_sweep(const GlobalOptions& options, const std::string& dataset_path,
              const std::string& strategy_text, const std::string& heuristic_text,
              int max_depth, int max_changes, const std::string& fraction_list,
              int denied_sample) {
  const Dataset dataset = abacx::load_dataset_file(dataset_path);
  const auto fractions = parse_double_list(fraction_list, "--fractions");
  const auto report = abacx::visibility_sweep(
      dataset, fractions, parse_strategy(strategy_text),
      SearchLimits{max_depth, max_changes}, options.seed,
      parse_heuristic(heuristic_text), denied_sample);

  if (format_or(options, "csv") == "json") {
    ordered_json doc = ordered_json::array();
    for (const auto& row : report.rows) {
      doc.push_back({{"visibility_pct", row.visibility_pct},
                     {"found_pct", row.found_pct},
                     {"avg_score", row.avg_score},
                     {"avg_nodes", row.avg_nodes},
                     {"avg_time_ms", row.avg_time_ms}});
    }
    std::cout << doc.dump(2) << "\n";
  } else {
    std::cout << "visibility_pct,found_pct,avg_score,avg_nodes,avg_time_ms\n";
    for (const auto& row : report.rows) {
      std::cout << fmt(row.visibility_pct) << "," << fmt(row.found_pct) << ","
                << fmt(row.avg_score) << "," << fmt(row.avg_nodes) << ","
                << fmt(row.avg_time_ms) << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ABAC policy trees with denial explanations"};
  app.require_subcommand(1);

  GlobalOptions options;
  app.add_option("--seed", options.seed, "rng seed")->capture_default_str();
  app.add_option("--format", options.format, "output format: json|csv|text")
      ->check(CLI::IsMember({"json", "csv", "text"}));

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset file");
  std::string preset, params_file, out_path;
  abacx::DatasetParams params = abacx::synthetic1_params();
  int n_requests = 10000;
  gen->add_option("--preset", preset, "synthetic1 | synthetic2");
  gen->add_option("--params-file", params_file, "dataset params JSON");
  gen->add_option("--users", params.n_users);
  gen->add_option("--objects", params.n_objects);
  gen->add_option("--envs", params.n_envs);
  gen->add_option("--user-attrs", params.user_attrs);
  gen->add_option("--object-attrs", params.object_attrs);
  gen->add_option("--env-attrs", params.env_attrs);
  gen->add_option("--user-values", params.user_values);
  gen->add_option("--object-values", params.object_values);
  gen->add_option("--env-values", params.env_values);
  gen->add_option("--rules", params.n_rules);
  gen->add_option("--ops", params.n_operations);
  gen->add_option("--wildcard-fraction", params.wildcard_fraction)
      ->capture_default_str();
  gen->add_option("--allow-ratio", params.target_allow_ratio)
      ->capture_default_str();
  gen->add_option("--requests", n_requests, "request pool size")
      ->capture_default_str();
  gen->add_option("--out", out_path, "output dataset file")->required();

  // build
  auto* build = app.add_subcommand("build", "build a policy tree from a dataset");
  std::string dataset_path, heuristic_text = "high_cost_first", dump_path;
  build->add_option("--dataset", dataset_path, "dataset file")->required();
  build->add_option("--heuristic", heuristic_text,
                    "highest_entropy|lowest_entropy|high_cost_first|"
                    "low_cost_first|random")
      ->capture_default_str();
  build->add_option("--dump-tree", dump_path, "write the tree export JSON here");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a request");
  std::string tree_path, request_path;
  eval->add_option("--dataset", dataset_path, "dataset file")->required();
  eval->add_option("--tree", tree_path, "tree dump (otherwise built fresh)");
  eval->add_option("--heuristic", heuristic_text)->capture_default_str();
  eval->add_option("--request", request_path, "request JSON file")->required();

  // explain
  auto* explain = app.add_subcommand("explain", "explain a denied request");
  std::string strategy_text = "change_first", actor = "requester";
  int max_depth = 5, max_changes = 3;
  explain->add_option("--dataset", dataset_path)->required();
  explain->add_option("--request", request_path)->required();
  explain->add_option("--strategy", strategy_text,
                      "depth_first|depth_best|change_first|change_best")
      ->capture_default_str();
  explain->add_option("--max-depth", max_depth)->capture_default_str();
  explain->add_option("--max-changes", max_changes)->capture_default_str();
  explain->add_option("--actor", actor)->capture_default_str();
  explain->add_option("--heuristic", heuristic_text)->capture_default_str();

  // bench
  auto* bench = app.add_subcommand("bench", "run the feedback benchmark");
  int n_queries = 10000;
  bench->add_option("--dataset", dataset_path)->required();
  bench->add_option("--heuristic", heuristic_text)->capture_default_str();
  bench->add_option("--strategy", strategy_text)->capture_default_str();
  bench->add_option("--max-depth", max_depth)->capture_default_str();
  bench->add_option("--max-changes", max_changes)->capture_default_str();
  bench->add_option("--queries", n_queries)->capture_default_str();

  // grid
  auto* grid = app.add_subcommand("grid", "grid search over the search limits");
  std::string depth_list = "3,5,10,20,30,50,75,100";
  std::string change_list = "1,2,3,5,10,15,20";
  int denied_sample = 200;
  grid->add_option("--dataset", dataset_path)->required();
  grid->add_option("--heuristic", heuristic_text)->capture_default_str();
  grid->add_option("--strategy", strategy_text)->capture_default_str();
  grid->add_option("--depth-grid", depth_list)->capture_default_str();
  grid->add_option("--changes-grid", change_list)->capture_default_str();
  grid->add_option("--denied-sample", denied_sample)->capture_default_str();

  // sweep
  auto* sweep = app.add_subcommand("sweep", "visibility sweep");
  std::string fraction_list = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,1.0";
  sweep->add_option("--dataset", dataset_path)->required();
  sweep->add_option("--strategy", strategy_text)->capture_default_str();
  sweep->add_option("--heuristic", heuristic_text)->capture_default_str();
  sweep->add_option("--max-depth", max_depth)->capture_default_str();
  sweep->add_option("--max-changes", max_changes)->capture_default_str();
  sweep->add_option("--fractions", fraction_list, "hidden fractions")
      ->capture_default_str();
  sweep->add_option("--denied-sample", denied_sample)->capture_default_str();

  // Let --seed/--format appear after the subcommand name as well.
  for (auto* sub : {gen, build, eval, explain, bench, grid, sweep})
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed())
      return run_gen(options, preset, params_file, params, n_requests, out_path);
    if (build->parsed())
      return run_build(options, dataset_path, heuristic_text, dump_path);
    if (eval->parsed())
      return run_eval(options, dataset_path, tree_path, heuristic_text,
                      request_path);
    if (explain->parsed())
      return run_explain(options, dataset_path, request_path, strategy_text,
                         max_depth, max_changes, actor, heuristic_text);
    if (bench->parsed())
      return run_bench(options, dataset_path, heuristic_text, strategy_text,
                       max_depth, max_changes, n_queries);
    if (grid->parsed())
      return run_grid(options, dataset_path, heuristic_text, strategy_text,
                      depth_list, change_list, denied_sample);
    if (sweep->parsed())
      return run_sweep(options, dataset_path, strategy_text, heuristic_text,
                       max_depth, max_changes, fraction_list, denied_sample);
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
