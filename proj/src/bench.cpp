#include "bigset/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <random>
#include <stdexcept>

namespace bigset::bench {

namespace {

// Power-law rank distribution tuned so ~20% of the keys draw ~80% of the
// ops: P(rank/N < t) = t^beta with beta = ln 0.8 / ln 0.2.
constexpr double kParetoExponent = 7.2125;

ActorId bench_actor(int index) { return "r" + std::to_string(index); }

Bytes element_bytes(uint64_t index, size_t element_size) {
  if (element_size < 8 && (index >> (8 * element_size)) != 0) {
    throw std::invalid_argument("element index does not fit element_size bytes");
  }
  Bytes out(element_size, '\0');
  for (size_t i = 0; i < element_size && i < 8; ++i) {
    out[element_size - 1 - i] = static_cast<char>((index >> (8 * i)) & 0xff);
  }
  return out;
}

Bytes encode_context(const Dots& dots) {
  ByteWriter w;
  w.u32(static_cast<uint32_t>(dots.size()));
  for (const Dot& d : dots) {
    w.sized(d.actor);
    w.u64(d.event);
  }
  return w.take();
}

/// One replication mode behind a uniform op interface. All state lives in
/// MemStores so logical costs come straight from store metrics; network
/// transfer is accounted by the driver as payload size times fan-out.
class Driver {
 public:
  explicit Driver(const Workload& w) : n_replicas_(w.n_replicas), rng_(w.seed ^ 0x9e3779b97f4a7c15ull) {
    for (int i = 0; i < n_replicas_; ++i) stores_.push_back(std::make_shared<MemStore>());
  }
  virtual ~Driver() = default;

  virtual void insert(const Bytes& set, const Bytes& element) = 0;
  virtual void full_read(const Bytes& set) = 0;
  virtual void member_probe(const Bytes& set, const Bytes& element) = 0;
  virtual std::vector<Bytes> value(const Bytes& set) = 0;

  StoreMetrics metrics() const {
    StoreMetrics total;
    for (const auto& store : stores_) total = total + store->metrics();
    return total;
  }
  uint64_t transferred() const { return transferred_; }

 protected:
  int coordinator() {
    return static_cast<int>(std::uniform_int_distribution<int>(0, n_replicas_ - 1)(rng_));
  }
  void ship(size_t payload_size) {
    transferred_ += payload_size * static_cast<uint64_t>(n_replicas_ - 1);
  }

  int n_replicas_;
  std::vector<std::shared_ptr<MemStore>> stores_;
  uint64_t transferred_ = 0;
  std::mt19937_64 rng_;
};

class BigsetDriver final : public Driver {
 public:
  explicit BigsetDriver(const Workload& w) : Driver(w) {
    for (int i = 0; i < n_replicas_; ++i) {
      replicas_.push_back(std::make_unique<Replica>(bench_actor(i), stores_[i]));
    }
  }

  void insert(const Bytes& set, const Bytes& element) override {
    int c = coordinator();
    Delta delta = replicas_[c]->coordinate_insert(set, element);
    ship(encode_delta(delta).size());
    for (int i = 0; i < n_replicas_; ++i) {
      if (i != c) replicas_[i]->apply_delta(set, delta);
    }
  }

  void full_read(const Bytes& set) override {
    int c = coordinator();
    Orswot state = replicas_[c]->read_all(set);
    transferred_ += encode_orswot(state).size();
  }

  void member_probe(const Bytes& set, const Bytes& element) override {
    int c = coordinator();
    auto [member, ctx] = replicas_[c]->is_member(set, element);
    (void)member;
    transferred_ += encode_context(ctx).size();
  }

  std::vector<Bytes> value(const Bytes& set) override {
    return replicas_[0]->read_all(set).value();
  }

 private:
  std::vector<std::unique_ptr<Replica>> replicas_;
};

/// Shared plumbing for the two single-object baselines: the whole serialized
/// set lives under one key per store.
class ObjectDriver : public Driver {
 public:
  using Driver::Driver;

  void full_read(const Bytes& set) override {
    int c = coordinator();
    auto raw = stores_[c]->get(set);
    transferred_ += raw ? raw->size() : 0;
  }

  void member_probe(const Bytes& set, const Bytes& element) override {
    int c = coordinator();
    Dots dots;
    if (auto raw = stores_[c]->get(set)) {
      Orswot state = decode_orswot(*raw);
      if (const Dots* found = state.find(element)) dots = *found;
    }
    transferred_ += encode_context(dots).size();
  }

  std::vector<Bytes> value(const Bytes& set) override {
    auto raw = stores_[0]->get(set);
    return raw ? decode_orswot(*raw).value() : std::vector<Bytes>{};
  }

 protected:
  Orswot load(int replica, const Bytes& set) {
    auto raw = stores_[replica]->get(set);
    return raw ? decode_orswot(*raw) : Orswot{};
  }
  void store(int replica, const Bytes& set, const Bytes& payload) {
    WriteBatch batch;
    batch.put(set, payload);
    stores_[replica]->apply(batch);
  }
};

class FullStateDriver final : public ObjectDriver {
 public:
  using ObjectDriver::ObjectDriver;

  void insert(const Bytes& set, const Bytes& element) override {
    int c = coordinator();
    Orswot state = load(c, set);
    state.add(bench_actor(c), element);
    Bytes payload = encode_orswot(state);
    store(c, set, payload);
    ship(payload.size());

    for (int i = 0; i < n_replicas_; ++i) {
      if (i == c) continue;
      // Downstream reads its local copy; a superseding update is stored
      // as-is, only true siblings pay the merge.
      auto local = stores_[i]->get(set);
      if (!local || peek_orswot_clock(payload).dominates(peek_orswot_clock(*local))) {
        store(i, set, payload);
      } else {
        Orswot merged = merge(decode_orswot(*local), decode_orswot(payload));
        store(i, set, encode_orswot(merged));
      }
    }
  }
};

class DeltaDriver final : public ObjectDriver {
 public:
  using ObjectDriver::ObjectDriver;

  void insert(const Bytes& set, const Bytes& element) override {
    int c = coordinator();
    Orswot state = load(c, set);
    Orswot delta = state.add_delta(bench_actor(c), element);
    store(c, set, encode_orswot(state));
    Bytes wire = encode_orswot(delta);
    ship(wire.size());

    for (int i = 0; i < n_replicas_; ++i) {
      if (i == c) continue;
      // A delta never supersedes: downstream always deserializes its full
      // local state, merges, and rewrites it.
      Orswot local = load(i, set);
      local.join_delta(delta);
      store(i, set, encode_orswot(local));
    }
  }
};

std::unique_ptr<Driver> make_driver(const Workload& w) {
  switch (w.mode) {
    case Mode::FullState: return std::make_unique<FullStateDriver>(w);
    case Mode::Delta: return std::make_unique<DeltaDriver>(w);
    case Mode::Bigset: return std::make_unique<BigsetDriver>(w);
  }
  throw std::invalid_argument("unknown mode");
}

Bytes set_name(uint64_t key_index, uint64_t keys) {
  return keys == 1 ? Bytes("s") : Bytes("k" + std::to_string(key_index));
}

uint64_t pick_key(KeyDist dist, uint64_t keys, uint64_t round_robin, std::mt19937_64& rng) {
  if (keys <= 1) return 0;
  if (dist == KeyDist::Sequential) return round_robin % keys;
  double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  auto idx = static_cast<uint64_t>(static_cast<double>(keys) * std::pow(u, kParetoExponent));
  return std::min(idx, keys - 1);
}

uint64_t percentile(std::vector<uint64_t>& totals, double p) {
  if (totals.empty()) return 0;
  size_t rank = static_cast<size_t>(p * static_cast<double>(totals.size() - 1));
  std::nth_element(totals.begin(), totals.begin() + static_cast<ptrdiff_t>(rank), totals.end());
  return totals[rank];
}

void csv_row(std::ostream* csv, const Workload& w, const OpSample& s) {
  if (csv == nullptr) return;
  *csv << mode_name(w.mode) << ',' << w.cardinality << ',' << s.op_index << ',' << s.op_type
       << ',' << s.bytes_read << ',' << s.bytes_written << ',' << s.bytes_transferred << ','
       << s.elapsed_ns << '\n';
}

}  // namespace

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::FullState: return "fullstate";
    case Mode::Delta: return "delta";
    case Mode::Bigset: return "bigset";
  }
  return "?";
}

std::optional<Mode> mode_from_name(const std::string& name) {
  if (name == "fullstate") return Mode::FullState;
  if (name == "delta") return Mode::Delta;
  if (name == "bigset") return Mode::Bigset;
  return std::nullopt;
}

void Workload::validate() const {
  if (cardinality < 1) throw std::invalid_argument("cardinality must be >= 1");
  if (element_size < 1) throw std::invalid_argument("element size must be >= 1");
  if (keys < 1) throw std::invalid_argument("keys must be >= 1");
  if (write_pct < 0 || write_pct > 100) throw std::invalid_argument("write_pct must be 0..100");
  if (n_replicas < 1) throw std::invalid_argument("n_replicas must be >= 1");
}

CostReport run_bench(const Workload& w, std::ostream* csv) {
  w.validate();
  auto driver = make_driver(w);
  std::mt19937_64 rng(w.seed);

  std::vector<uint64_t> next_element(w.keys, 0);
  auto do_insert = [&](uint64_t key_index) {
    uint64_t element_index = next_element[key_index]++;
    driver->insert(set_name(key_index, w.keys), element_bytes(element_index, w.element_size));
  };

  bool mixed = w.ops > 0;
  if (mixed) {
    // Prefill to cardinality; only the mixed phase is measured.
    for (uint64_t k = 0; k < w.keys; ++k) {
      for (uint64_t i = 0; i < w.cardinality; ++i) do_insert(k);
    }
  }

  uint64_t total_ops = mixed ? w.ops : w.cardinality * w.keys;
  CostReport report;
  report.samples.reserve(total_ops);
  std::vector<uint64_t> totals;
  totals.reserve(total_ops);

  StoreMetrics base = driver->metrics();
  uint64_t base_transferred = driver->transferred();
  auto bench_start = std::chrono::steady_clock::now();

  for (uint64_t op = 0; op < total_ops; ++op) {
    uint64_t key_index = pick_key(w.dist, w.keys, op, rng);
    bool is_write =
        !mixed || static_cast<int>(std::uniform_int_distribution<int>(0, 99)(rng)) < w.write_pct;

    StoreMetrics before = driver->metrics();
    uint64_t transferred_before = driver->transferred();
    auto t0 = std::chrono::steady_clock::now();
    if (is_write) {
      do_insert(key_index);
    } else {
      driver->full_read(set_name(key_index, w.keys));
    }
    auto t1 = std::chrono::steady_clock::now();

    StoreMetrics delta = driver->metrics() - before;
    OpSample sample;
    sample.op_index = op;
    sample.op_type = is_write ? "insert" : "read";
    sample.bytes_read = delta.bytes_read;
    sample.bytes_written = delta.bytes_written;
    sample.bytes_transferred = driver->transferred() - transferred_before;
    sample.elapsed_ns =
        static_cast<uint64_t>(std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
    csv_row(csv, w, sample);
    totals.push_back(sample.bytes_read + sample.bytes_written + sample.bytes_transferred);
    report.samples.push_back(sample);
  }

  auto bench_end = std::chrono::steady_clock::now();
  StoreMetrics all = driver->metrics() - base;
  report.ops = total_ops;
  report.bytes_read = all.bytes_read;
  report.bytes_written = all.bytes_written;
  report.bytes_transferred = driver->transferred() - base_transferred;
  report.keys_read = all.keys_read;
  report.keys_written = all.keys_written;
  report.elapsed_seconds = std::chrono::duration<double>(bench_end - bench_start).count();

  // Marginal insert cost: mean bytes written per insert over the last tenth
  // of the insert samples, i.e. the cost of inserting near full cardinality.
  std::vector<const OpSample*> inserts;
  for (const auto& s : report.samples) {
    if (s.op_type[0] == 'i') inserts.push_back(&s);
  }
  if (!inserts.empty()) {
    size_t window = std::max<size_t>(1, inserts.size() / 10);
    uint64_t sum = 0;
    for (size_t i = inserts.size() - window; i < inserts.size(); ++i) {
      sum += inserts[i]->bytes_written;
    }
    report.marginal_insert_bytes = sum / window;
  }

  std::vector<uint64_t> scratch = totals;
  report.p50 = percentile(scratch, 0.50);
  report.p95 = percentile(scratch, 0.95);
  report.p99 = percentile(scratch, 0.99);
  return report;
}

ReadCosts read_bench(const Workload& w, std::ostream* csv) {
  w.validate();
  auto driver = make_driver(w);
  std::mt19937_64 rng(w.seed + 1);
  for (uint64_t k = 0; k < w.keys; ++k) {
    for (uint64_t i = 0; i < w.cardinality; ++i) {
      driver->insert(set_name(k, w.keys), element_bytes(i, w.element_size));
    }
  }

  constexpr uint64_t kReps = 7;
  ReadCosts costs;

  StoreMetrics before = driver->metrics();
  for (uint64_t rep = 0; rep < kReps; ++rep) {
    uint64_t key_index = pick_key(w.dist, w.keys, rep, rng);
    StoreMetrics op_before = driver->metrics();
    auto t0 = std::chrono::steady_clock::now();
    driver->full_read(set_name(key_index, w.keys));
    auto t1 = std::chrono::steady_clock::now();
    StoreMetrics d = driver->metrics() - op_before;
    OpSample sample{rep, "read", d.bytes_read, d.bytes_written, 0,
                    static_cast<uint64_t>(
                        std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count())};
    csv_row(csv, w, sample);
  }
  StoreMetrics full = driver->metrics() - before;
  costs.full_read_keys = full.keys_read / kReps;
  costs.full_read_bytes = full.bytes_read / kReps;

  before = driver->metrics();
  for (uint64_t rep = 0; rep < kReps; ++rep) {
    uint64_t key_index = pick_key(w.dist, w.keys, rep, rng);
    uint64_t element_index = std::uniform_int_distribution<uint64_t>(0, w.cardinality - 1)(rng);
    StoreMetrics op_before = driver->metrics();
    auto t0 = std::chrono::steady_clock::now();
    driver->member_probe(set_name(key_index, w.keys),
                         element_bytes(element_index, w.element_size));
    auto t1 = std::chrono::steady_clock::now();
    StoreMetrics d = driver->metrics() - op_before;
    OpSample sample{rep, "is_member", d.bytes_read, d.bytes_written, 0,
                    static_cast<uint64_t>(
                        std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count())};
    csv_row(csv, w, sample);
  }
  StoreMetrics member = driver->metrics() - before;
  costs.member_keys = member.keys_read / kReps;
  costs.member_bytes = member.bytes_read / kReps;
  return costs;
}

namespace {

double regression_slope(const std::vector<std::pair<double, double>>& points) {
  double n = static_cast<double>(points.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [x, y] : points) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TrendVerdicts compare_modes(const TrendInputs& inputs, std::ostream* csv) {
  if (inputs.regression_ns.size() < 2) {
    throw std::invalid_argument("regression needs at least two cardinalities");
  }
  TrendVerdicts verdicts;

  auto fill_workload = [&](Mode mode, uint64_t n) {
    Workload w;
    w.mode = mode;
    w.cardinality = n;
    w.element_size = inputs.element_size;
    w.seed = inputs.seed;
    w.n_replicas = inputs.n_replicas;
    return w;
  };

  std::vector<std::pair<double, double>> fullstate_points;
  std::vector<std::pair<double, double>> bigset_points;
  for (uint64_t n : inputs.regression_ns) {
    CostReport fullstate = run_bench(fill_workload(Mode::FullState, n), csv);
    CostReport bigset = run_bench(fill_workload(Mode::Bigset, n), csv);
    fullstate_points.emplace_back(std::log(static_cast<double>(n)),
                                  std::log(static_cast<double>(fullstate.bytes_written)));
    bigset_points.emplace_back(std::log(static_cast<double>(n)),
                               std::log(static_cast<double>(bigset.bytes_written)));
    if (n == inputs.regression_ns.front()) verdicts.bigset_marginal_lo = bigset.marginal_insert_bytes;
    if (n == inputs.regression_ns.back()) verdicts.bigset_marginal_hi = bigset.marginal_insert_bytes;
  }
  verdicts.fullstate_exponent = regression_slope(fullstate_points);
  verdicts.bigset_exponent = regression_slope(bigset_points);

  if (inputs.marginal_ns.size() >= 2) {
    CostReport fs_lo = run_bench(fill_workload(Mode::FullState, inputs.marginal_ns.front()), csv);
    CostReport fs_hi = run_bench(fill_workload(Mode::FullState, inputs.marginal_ns.back()), csv);
    CostReport bs_lo = run_bench(fill_workload(Mode::Bigset, inputs.marginal_ns.front()), csv);
    CostReport bs_hi = run_bench(fill_workload(Mode::Bigset, inputs.marginal_ns.back()), csv);
    verdicts.fullstate_marginal_5k = fs_lo.marginal_insert_bytes;
    verdicts.fullstate_marginal_10k = fs_hi.marginal_insert_bytes;
    verdicts.bigset_marginal_5k = bs_lo.marginal_insert_bytes;
    verdicts.bigset_marginal_10k = bs_hi.marginal_insert_bytes;
  }

  ReadCosts bigset_reads = read_bench(fill_workload(Mode::Bigset, inputs.read_n), csv);
  ReadCosts fullstate_reads = read_bench(fill_workload(Mode::FullState, inputs.read_n), csv);
  verdicts.bigset_read_keys = bigset_reads.full_read_keys;
  verdicts.fullstate_read_keys = fullstate_reads.full_read_keys;
  verdicts.bigset_read_bytes = bigset_reads.full_read_bytes;
  verdicts.fullstate_read_bytes = fullstate_reads.full_read_bytes;
  return verdicts;
}

void print_report(const Workload& w, const CostReport& report, std::ostream& out) {
  out << "mode=" << mode_name(w.mode) << " n=" << w.cardinality << " keys=" << w.keys
      << " ops=" << report.ops << " bytes_read=" << report.bytes_read
      << " bytes_written=" << report.bytes_written
      << " bytes_transferred=" << report.bytes_transferred << " keys_read=" << report.keys_read
      << " keys_written=" << report.keys_written << " per_op_p50=" << report.p50
      << " p95=" << report.p95 << " p99=" << report.p99
      << " marginal_insert_bytes=" << report.marginal_insert_bytes << " elapsed_s="
      << report.elapsed_seconds << '\n';
}

void print_verdicts(const TrendVerdicts& v, std::ostream& out) {
  auto line = [&out](const std::string& what, bool ok) {
    out << "TREND " << what << (ok ? " PASS" : " FAIL") << '\n';
  };
  line("fullstate write exponent " + std::to_string(v.fullstate_exponent) + " in [1.8,2.2]",
       v.fullstate_exponent >= 1.8 && v.fullstate_exponent <= 2.2);
  line("bigset write exponent " + std::to_string(v.bigset_exponent) + " in [0.9,1.1]",
       v.bigset_exponent >= 0.9 && v.bigset_exponent <= 1.1);
  line("bigset per-insert bytes at grid ends " + std::to_string(v.bigset_marginal_lo) + " -> " +
           std::to_string(v.bigset_marginal_hi) + " within 2x",
       v.fill_ratio_ok());
  line("fullstate per-insert increases 5k->10k: " + std::to_string(v.fullstate_marginal_5k) +
           " -> " + std::to_string(v.fullstate_marginal_10k),
       v.fullstate_marginal_10k > v.fullstate_marginal_5k);
  line("bigset per-insert ratio 10k/5k <= 1.25: " + std::to_string(v.bigset_marginal_5k) +
           " -> " + std::to_string(v.bigset_marginal_10k),
       v.bigset_marginal_10k * 4 <= v.bigset_marginal_5k * 5);
  line("full read keys: bigset " + std::to_string(v.bigset_read_keys) + " > fullstate " +
           std::to_string(v.fullstate_read_keys),
       v.read_direction_ok());
}

std::vector<Bytes> final_value(const Workload& w) {
  w.validate();
  auto driver = make_driver(w);
  for (uint64_t k = 0; k < w.keys; ++k) {
    for (uint64_t i = 0; i < w.cardinality; ++i) {
      driver->insert(set_name(k, w.keys), element_bytes(i, w.element_size));
    }
  }
  return driver->value(set_name(0, w.keys));
}

}  // namespace bigset::bench
