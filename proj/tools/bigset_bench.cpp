// Cost benchmark CLI: full-state vs delta vs decomposed-set replication,
// measured in logical bytes and keys read/written/transferred.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "bigset/bench.hpp"

using namespace bigset;

int main(int argc, char** argv) {
  CLI::App app{"bigset cost benchmark"};

  std::string mode_str = "bigset";
  std::string dist_str = "sequential";
  std::string mix_str;
  std::string csv_path;
  bench::Workload w;
  bool assert_trends = false;
  bool run_read_bench = false;

  app.add_option("--mode", mode_str, "fullstate, delta or bigset")
      ->check(CLI::IsMember({"fullstate", "delta", "bigset"}));
  app.add_option("--cardinality", w.cardinality, "elements per key");
  app.add_option("--element-size", w.element_size, "bytes per element");
  app.add_option("--ops", w.ops, "mixed-phase op count; 0 = insert-only fill");
  app.add_option("--mix", mix_str, "write:read percentages, e.g. 60:40");
  app.add_option("--keys", w.keys, "number of distinct sets");
  app.add_option("--dist", dist_str, "key distribution: sequential or pareto")
      ->check(CLI::IsMember({"sequential", "pareto"}));
  app.add_option("--seed", w.seed, "rng seed");
  app.add_option("--replicas", w.n_replicas, "replica count");
  app.add_option("--csv", csv_path, "write per-op samples to this file");
  app.add_flag("--assert-trends", assert_trends,
               "run the cross-mode trend suite; exit nonzero when a verdict fails");
  app.add_flag("--read-bench", run_read_bench, "measure full-read and is_member costs instead");

  CLI11_PARSE(app, argc, argv);

  w.mode = *bench::mode_from_name(mode_str);
  w.dist = dist_str == "pareto" ? bench::KeyDist::Pareto : bench::KeyDist::Sequential;
  if (!mix_str.empty()) {
    auto colon = mix_str.find(':');
    if (colon == std::string::npos) {
      std::cerr << "--mix expects w:r, e.g. 60:40\n";
      return 2;
    }
    int write = std::stoi(mix_str.substr(0, colon));
    int read = std::stoi(mix_str.substr(colon + 1));
    if (write < 0 || read < 0 || write + read == 0) {
      std::cerr << "--mix percentages must be nonnegative and not both zero\n";
      return 2;
    }
    w.write_pct = 100 * write / (write + read);
  }

  std::ofstream csv_file;
  std::ostream* csv = nullptr;
  if (!csv_path.empty()) {
    csv_file.open(csv_path);
    if (!csv_file) {
      std::cerr << "cannot open " << csv_path << " for writing\n";
      return 2;
    }
    csv_file << bench::kCsvHeader << '\n';
    csv = &csv_file;
  }

  try {
    if (assert_trends) {
      bench::TrendInputs inputs;
      inputs.seed = w.seed;
      inputs.element_size = w.element_size;
      inputs.n_replicas = w.n_replicas;
      bench::TrendVerdicts verdicts = bench::compare_modes(inputs, csv);
      bench::print_verdicts(verdicts, std::cout);
      return verdicts.all_ok() ? 0 : 1;
    }
    if (run_read_bench) {
      bench::ReadCosts costs = bench::read_bench(w, csv);
      std::cout << "mode=" << bench::mode_name(w.mode) << " n=" << w.cardinality
                << " full_read_keys=" << costs.full_read_keys
                << " full_read_bytes=" << costs.full_read_bytes
                << " is_member_keys=" << costs.member_keys
                << " is_member_bytes=" << costs.member_bytes << '\n';
      return 0;
    }
    bench::CostReport report = bench::run_bench(w, csv);
    bench::print_report(w, report, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
