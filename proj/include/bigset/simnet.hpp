#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bigset/merge_stream.hpp"
#include "bigset/replica.hpp"

namespace bigset::sim {

/// How a client picks replicas within one operation.
///   ReadWriteSplit — context read from one replica, op coordinated at
///                    another (possibly the same, chosen independently).
///   SameReplica    — context and coordination at the same replica.
///   BlindAdds      — no context read at all; adds carry an empty context.
enum class SessionPolicy { ReadWriteSplit, SameReplica, BlindAdds };

/// Everything a run needs; the same config and seed reproduce the same trace
/// and byte-identical final states.
struct ScenarioConfig {
  uint64_t seed = 1;
  int n_replicas = 3;
  int op_count = 100;
  int element_universe = 24;
  double duplicate_rate = 0.0;   // extra delivery of the same message
  double reorder_rate = 0.0;     // delivery picks up extra jitter
  double redeliver_rate = 0.0;   // first attempt dropped, redelivered later
  double compact_rate = 0.0;     // a random replica compacts after an op
  int read_quorum = 2;
  SessionPolicy session = SessionPolicy::ReadWriteSplit;
  Bytes set_name = "s";

  void validate() const;
};

/// Parses `key=value` lines; '#' starts a comment. Keys: seed, replicas,
/// ops, elements, duplicate, reorder, redeliver, compact, quorum, session.
ScenarioConfig parse_scenario_config(const std::string& text);

/// Test seam: rewrites a delta right before it is applied at `target`.
/// The oracle keeps seeing the faithful protocol, so a mutation here must
/// show up as a divergence.
struct SimHooks {
  std::function<Delta(const Delta&, int target)> delta_transform;
};

struct Divergence {
  std::string detail;
  Bytes first_differing_element;
  int minimized_op_count = 0;
  std::vector<std::string> minimized_trace;
};

struct ScenarioResult {
  bool converged = false;
  std::optional<Divergence> divergence;
  std::vector<Orswot> replica_states;  // final read of every replica
  Orswot oracle_state;                 // merged reference oracle
  std::vector<StoreMetrics> metrics;
  std::vector<std::string> trace;
  Bytes state_digest;  // concatenated store dumps + metrics, for determinism checks
};

/// Drives op_count client operations against n_replicas decomposed replicas
/// and a per-replica reference oracle fed the same events, delivering deltas
/// at-least-once with the configured faults, then drains the schedule and
/// checks that every replica's read equals the merged oracle. On divergence
/// the failing scenario is shrunk to its shortest failing op prefix.
ScenarioResult run_scenario(const ScenarioConfig& cfg, const SimHooks& hooks = {});

struct ConvergenceReport {
  bool ok = true;
  Bytes first_differing_element;
  std::string detail;
};

/// Pairwise read-value equality across replicas plus per-replica health:
/// tombstone dominated by the set-clock, canonical clocks, every element key
/// covered by the set-clock. When an oracle is given, replica state must
/// match it exactly.
ConvergenceReport check_convergence(const std::vector<Replica*>& replicas, const Bytes& set,
                                    const Orswot* oracle = nullptr);

void dump_trace(const std::vector<std::string>& trace, std::ostream& out);

}  // namespace bigset::sim
