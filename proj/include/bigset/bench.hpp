#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bigset/replica.hpp"

namespace bigset::bench {

/// Replication strategy under measurement.
///   FullState — the whole serialized set is read, updated, written and
///               shipped on every insert.
///   Delta     — writes ship a one-element fragment, but downstream still
///               reads, merges and rewrites its full local state.
///   Bigset    — decomposed keys; writes touch the two clocks plus one
///               element key.
enum class Mode { FullState, Delta, Bigset };

enum class KeyDist { Sequential, Pareto };

const char* mode_name(Mode m);
std::optional<Mode> mode_from_name(const std::string& name);

inline constexpr const char* kCsvHeader =
    "mode,n,op_index,op_type,bytes_read,bytes_written,bytes_transferred,elapsed_ns";

struct Workload {
  Mode mode = Mode::Bigset;
  uint64_t cardinality = 1000;  // elements per key for fills / prefills
  size_t element_size = 4;      // bytes per element
  uint64_t ops = 0;             // 0 = insert-only fill of `cardinality`
  int write_pct = 100;          // w in a w:r mix, percent
  uint64_t keys = 1;            // distinct sets
  KeyDist dist = KeyDist::Sequential;
  uint64_t seed = 1;
  int n_replicas = 3;

  void validate() const;
};

struct OpSample {
  uint64_t op_index = 0;
  const char* op_type = "insert";
  uint64_t bytes_read = 0;
  uint64_t bytes_written = 0;
  uint64_t bytes_transferred = 0;
  uint64_t elapsed_ns = 0;
};

/// Cumulative and per-op logical cost of one workload. Wall-clock numbers
/// are reported but never asserted; logical bytes and key counts are the
/// primary, hardware-independent metric.
struct CostReport {
  uint64_t ops = 0;
  uint64_t bytes_read = 0;
  uint64_t bytes_written = 0;
  uint64_t bytes_transferred = 0;
  uint64_t keys_read = 0;
  uint64_t keys_written = 0;
  uint64_t p50 = 0, p95 = 0, p99 = 0;  // per-op total logical bytes
  uint64_t marginal_insert_bytes = 0;  // mean bytes_written/op over the last decile
  double elapsed_seconds = 0.0;
  std::vector<OpSample> samples;
};

void print_report(const Workload& w, const CostReport& report, std::ostream& out);

/// Runs the workload against the chosen mode and reports logical costs.
/// When csv is given, one row per op:
///   mode,n,op_index,op_type,bytes_read,bytes_written,bytes_transferred,elapsed_ns
CostReport run_bench(const Workload& w, std::ostream* csv = nullptr);

/// Read-side costs measured on a set pre-filled to w.cardinality: a full
/// streamed read versus a single-element membership probe, averaged over a
/// few repetitions.
struct ReadCosts {
  uint64_t full_read_keys = 0;
  uint64_t full_read_bytes = 0;
  uint64_t member_keys = 0;
  uint64_t member_bytes = 0;
};

ReadCosts read_bench(const Workload& w, std::ostream* csv = nullptr);

/// Grid definitions for the trend comparison.
struct TrendInputs {
  std::vector<uint64_t> regression_ns{500, 1000, 2000, 4000};
  std::vector<uint64_t> marginal_ns{5000, 10000};
  uint64_t read_n = 1000;
  size_t element_size = 4;
  uint64_t seed = 1;
  int n_replicas = 3;
};

/// Cross-mode verdicts: write-cost growth exponents from a log-log
/// regression of cumulative bytes written over the fill grid, marginal
/// per-insert behavior at the larger cardinalities, and the full-read
/// direction (keys touched) against the full-state baseline.
struct TrendVerdicts {
  double fullstate_exponent = 0.0;
  double bigset_exponent = 0.0;
  uint64_t bigset_marginal_lo = 0;  // per-insert bytes at the smallest grid n
  uint64_t bigset_marginal_hi = 0;  // ... at the largest grid n
  uint64_t fullstate_marginal_5k = 0;
  uint64_t fullstate_marginal_10k = 0;
  uint64_t bigset_marginal_5k = 0;
  uint64_t bigset_marginal_10k = 0;
  uint64_t bigset_read_keys = 0;
  uint64_t fullstate_read_keys = 0;
  uint64_t bigset_read_bytes = 0;
  uint64_t fullstate_read_bytes = 0;

  bool exponents_ok() const {
    return fullstate_exponent >= 1.8 && fullstate_exponent <= 2.2 &&
           bigset_exponent >= 0.9 && bigset_exponent <= 1.1;
  }
  bool fill_ratio_ok() const {
    return bigset_marginal_hi <= 2 * bigset_marginal_lo;
  }
  bool marginal_ok() const {
    return fullstate_marginal_10k > fullstate_marginal_5k &&
           bigset_marginal_10k * 4 <= bigset_marginal_5k * 5;  // ratio <= 1.25
  }
  bool read_direction_ok() const { return bigset_read_keys > fullstate_read_keys; }
  bool all_ok() const {
    return exponents_ok() && fill_ratio_ok() && marginal_ok() && read_direction_ok();
  }
};

TrendVerdicts compare_modes(const TrendInputs& inputs, std::ostream* csv = nullptr);
void print_verdicts(const TrendVerdicts& v, std::ostream& out);

/// Final value of one key under the given mode and fill; the three modes
/// must agree for the same insert sequence.
std::vector<Bytes> final_value(const Workload& w);

}  // namespace bigset::bench
