// Deterministic multi-replica scenario runner: seeded client operations,
// faulty delta delivery, convergence and oracle-equivalence checking.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "bigset/simnet.hpp"

using namespace bigset;

int main(int argc, char** argv) {
  CLI::App app{"bigset cluster simulator"};

  std::string config_path;
  std::string trace_path;
  std::string session_str;
  sim::ScenarioConfig cfg;
  uint64_t runs = 1;
  bool quiet = false;

  app.add_option("--config", config_path, "key=value scenario file (flags override)");
  auto* opt_seed = app.add_option("--seed", cfg.seed, "base rng seed");
  auto* opt_replicas = app.add_option("--replicas", cfg.n_replicas, "replica count");
  auto* opt_ops = app.add_option("--ops", cfg.op_count, "client operations per scenario");
  auto* opt_elements = app.add_option("--elements", cfg.element_universe, "element universe size");
  auto* opt_dup = app.add_option("--duplicate", cfg.duplicate_rate, "duplicate delivery rate [0,1]");
  auto* opt_reorder = app.add_option("--reorder", cfg.reorder_rate, "reorder jitter rate [0,1]");
  auto* opt_redeliver =
      app.add_option("--redeliver", cfg.redeliver_rate, "drop-with-redelivery rate [0,1]");
  auto* opt_compact = app.add_option("--compact", cfg.compact_rate, "per-op compaction rate [0,1]");
  auto* opt_quorum = app.add_option("--quorum", cfg.read_quorum, "read quorum R <= replicas");
  auto* opt_session = app.add_option("--session", session_str, "client policy: split, same or blind")
                          ->check(CLI::IsMember({"split", "same", "blind"}));
  app.add_option("--runs", runs, "number of consecutive seeds to run");
  app.add_option("--trace", trace_path, "dump the (last) scenario trace here");
  app.add_flag("--quiet", quiet, "only print failures and the summary");

  CLI11_PARSE(app, argc, argv);

  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "cannot read " << config_path << '\n';
      return 2;
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    sim::ScenarioConfig file_cfg;
    try {
      file_cfg = sim::parse_scenario_config(buffer.str());
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 2;
    }
    // The file supplies every value not given explicitly on the command line.
    if (opt_seed->count() == 0) cfg.seed = file_cfg.seed;
    if (opt_replicas->count() == 0) cfg.n_replicas = file_cfg.n_replicas;
    if (opt_ops->count() == 0) cfg.op_count = file_cfg.op_count;
    if (opt_elements->count() == 0) cfg.element_universe = file_cfg.element_universe;
    if (opt_dup->count() == 0) cfg.duplicate_rate = file_cfg.duplicate_rate;
    if (opt_reorder->count() == 0) cfg.reorder_rate = file_cfg.reorder_rate;
    if (opt_redeliver->count() == 0) cfg.redeliver_rate = file_cfg.redeliver_rate;
    if (opt_compact->count() == 0) cfg.compact_rate = file_cfg.compact_rate;
    if (opt_quorum->count() == 0) cfg.read_quorum = file_cfg.read_quorum;
    if (opt_session->count() == 0) cfg.session = file_cfg.session;
    cfg.set_name = file_cfg.set_name;
  }
  if (opt_session->count() > 0) {
    cfg.session = session_str == "same"    ? sim::SessionPolicy::SameReplica
                  : session_str == "blind" ? sim::SessionPolicy::BlindAdds
                                           : sim::SessionPolicy::ReadWriteSplit;
  }

  uint64_t failures = 0;
  std::vector<std::string> last_trace;
  for (uint64_t i = 0; i < runs; ++i) {
    sim::ScenarioConfig run_cfg = cfg;
    run_cfg.seed = cfg.seed + i;
    sim::ScenarioResult result;
    try {
      result = sim::run_scenario(run_cfg);
    } catch (const std::exception& e) {
      std::cerr << "seed " << run_cfg.seed << ": error: " << e.what() << '\n';
      return 2;
    }
    last_trace = result.divergence ? result.divergence->minimized_trace : result.trace;
    if (!result.converged) {
      ++failures;
      std::cout << "seed " << run_cfg.seed << " DIVERGED: " << result.divergence->detail
                << " (element " << result.divergence->first_differing_element << ", minimized to "
                << result.divergence->minimized_op_count << " ops)\n";
    } else if (!quiet) {
      std::cout << "seed " << run_cfg.seed << " converged: " << result.replica_states.size()
                << " replicas, value size " << result.oracle_state.value().size() << '\n';
    }
  }

  if (!trace_path.empty()) {
    std::ofstream out(trace_path);
    if (!out) {
      std::cerr << "cannot write " << trace_path << '\n';
      return 2;
    }
    sim::dump_trace(last_trace, out);
  }

  std::cout << runs << " scenario(s), " << failures << " divergence(s)\n";
  return failures == 0 ? 0 : 1;
}
