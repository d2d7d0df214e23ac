#include "bigset/simnet.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <queue>
#include <random>
#include <sstream>
#include <stdexcept>

namespace bigset::sim {

namespace {

std::string printable(const Bytes& b) {
  for (unsigned char c : b) {
    if (c < 0x20 || c > 0x7e) return "0x" + to_hex(b);
  }
  return b;
}

std::string dots_to_string(const Dots& dots) {
  std::string out = "[";
  for (size_t i = 0; i < dots.size(); ++i) {
    if (i > 0) out += ' ';
    out += printable(dots[i].actor) + ":" + std::to_string(dots[i].event);
  }
  out += ']';
  return out;
}

ActorId replica_actor(int index) { return "r" + std::to_string(index); }

Bytes element_name(int index, int universe) {
  int width = 1;
  for (int scale = 10; scale <= universe; scale *= 10) ++width;
  std::string digits = std::to_string(index);
  return "e" + std::string(width - digits.size(), '0') + digits;
}

struct Message {
  enum class Kind { Insert, Remove };
  Kind kind = Kind::Insert;
  Delta delta;    // Insert
  Bytes element;  // Remove
  Context ctx;    // Remove
};

struct Event {
  uint64_t time = 0;
  uint64_t seq = 0;
  enum class Kind { Deliver, Compact } kind = Kind::Deliver;
  int target = 0;
  Message message;
  bool duplicate = false;
  bool redelivered = false;
};

struct EventAfter {
  bool operator()(const Event& a, const Event& b) const {
    if (a.time != b.time) return a.time > b.time;
    return a.seq > b.seq;
  }
};

struct Cluster {
  std::vector<std::shared_ptr<MemStore>> stores;
  std::vector<std::unique_ptr<Replica>> replicas;
  std::vector<Orswot> oracles;
};

Cluster make_cluster(int n) {
  Cluster c;
  c.oracles.resize(n);
  for (int i = 0; i < n; ++i) {
    c.stores.push_back(std::make_shared<MemStore>());
    c.replicas.push_back(std::make_unique<Replica>(replica_actor(i), c.stores.back()));
  }
  return c;
}

struct RunOutcome {
  Cluster cluster;
  std::vector<std::string> trace;
  ConvergenceReport report;
  Orswot oracle_state;
};

/// One deterministic pass over the first `op_limit` client operations.
RunOutcome run_once(const ScenarioConfig& cfg, const SimHooks& hooks, int op_limit) {
  RunOutcome out;
  out.cluster = make_cluster(cfg.n_replicas);
  auto& cluster = out.cluster;

  std::mt19937_64 rng(cfg.seed);
  auto chance = [&rng](double rate) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < rate;
  };
  auto pick = [&rng](int n) {
    return static_cast<int>(std::uniform_int_distribution<uint64_t>(0, n - 1)(rng));
  };

  std::priority_queue<Event, std::vector<Event>, EventAfter> queue;
  uint64_t seq = 0;

  auto deliver = [&](const Event& ev) {
    Replica& replica = *cluster.replicas[ev.target];
    Orswot& oracle = cluster.oracles[ev.target];
    if (ev.kind == Event::Kind::Compact) {
      replica.compact_set(cfg.set_name);
      return;
    }
    if (ev.message.kind == Message::Kind::Insert) {
      Delta wire = hooks.delta_transform ? hooks.delta_transform(ev.message.delta, ev.target)
                                         : ev.message.delta;
      replica.apply_delta(cfg.set_name, wire);
      const Delta& faithful = ev.message.delta;
      oracle.apply_delta(faithful.element(), faithful.dot(), faithful.ctx);
    } else {
      replica.remove(cfg.set_name, ev.message.element, ev.message.ctx);
      oracle.remove(ev.message.element, ev.message.ctx);
    }
  };

  auto drain_until = [&](uint64_t now) {
    while (!queue.empty() && queue.top().time <= now) {
      Event ev = queue.top();
      queue.pop();
      deliver(ev);
    }
  };

  auto schedule_fanout = [&](uint64_t now, int coordinator, const Message& message,
                             std::string& schedule_note) {
    for (int target = 0; target < cfg.n_replicas; ++target) {
      // Fixed draw count per target keeps the rng stream aligned across
      // prefix re-runs and config tweaks.
      bool reorder = chance(cfg.reorder_rate);
      uint64_t jitter = 1 + std::uniform_int_distribution<uint64_t>(0, 19)(rng);
      bool redeliver = chance(cfg.redeliver_rate);
      uint64_t redeliver_extra = std::uniform_int_distribution<uint64_t>(10, 30)(rng);
      bool duplicate = chance(cfg.duplicate_rate);
      uint64_t duplicate_at = 1 + std::uniform_int_distribution<uint64_t>(0, 19)(rng);
      if (target == coordinator) continue;

      uint64_t at = now + (reorder ? jitter : 1);
      if (redeliver) at += redeliver_extra;
      queue.push(Event{at, seq++, Event::Kind::Deliver, target, message, false, redeliver});
      schedule_note += " r" + std::to_string(target) + "@" + std::to_string(at) +
                       (redeliver ? "*" : "");
      if (duplicate) {
        queue.push(Event{now + duplicate_at, seq++, Event::Kind::Deliver, target, message,
                         true, false});
        schedule_note +=
            " r" + std::to_string(target) + "@" + std::to_string(now + duplicate_at) + "+";
      }
    }
  };

  for (int op = 0; op < op_limit; ++op) {
    uint64_t now = static_cast<uint64_t>(op + 1) * 10;
    drain_until(now);

    bool is_add = chance(0.6);
    int element_index = pick(cfg.element_universe);
    int ctx_source = pick(cfg.n_replicas);
    int coordinator = pick(cfg.n_replicas);
    if (cfg.session == SessionPolicy::SameReplica) ctx_source = coordinator;

    Bytes element = element_name(element_index, cfg.element_universe);
    Context ctx;
    if (cfg.session != SessionPolicy::BlindAdds) {
      ctx = cluster.replicas[ctx_source]->is_member(cfg.set_name, element).second;
    }

    std::ostringstream line;
    line << "op=" << op << " t=" << now << " coord=r" << coordinator << " ctx_src=r"
         << ctx_source << " elem=" << element << " ctx=" << dots_to_string(ctx);

    if (is_add) {
      Delta delta = cluster.replicas[coordinator]->coordinate_insert(cfg.set_name, element, ctx);
      Dot oracle_dot =
          cluster.oracles[coordinator].add(replica_actor(coordinator), element, ctx);
      if (oracle_dot != delta.dot()) {
        throw std::logic_error("simnet: oracle and replica minted different dots");
      }
      line << " kind=add dot=" << printable(delta.dot().actor) << ":" << delta.dot().event;
      std::string schedule;
      schedule_fanout(now, coordinator, Message{Message::Kind::Insert, delta, {}, {}}, schedule);
      line << " deliveries=" << (schedule.empty() ? " none" : schedule);
    } else if (ctx.empty()) {
      // Nothing observed: a remove with no context is a no-op everywhere.
      cluster.replicas[coordinator]->remove(cfg.set_name, element, ctx);
      cluster.oracles[coordinator].remove(element, ctx);
      line << " kind=remove noop=1";
    } else {
      cluster.replicas[coordinator]->remove(cfg.set_name, element, ctx);
      cluster.oracles[coordinator].remove(element, ctx);
      line << " kind=remove";
      std::string schedule;
      schedule_fanout(now, coordinator, Message{Message::Kind::Remove, {}, element, ctx},
                      schedule);
      line << " deliveries=" << (schedule.empty() ? " none" : schedule);
    }
    out.trace.push_back(line.str());

    bool compact = chance(cfg.compact_rate);
    int compact_replica = pick(cfg.n_replicas);
    if (compact) {
      queue.push(Event{now + 1, seq++, Event::Kind::Compact, compact_replica, {}, false, false});
      out.trace.push_back("compact t=" + std::to_string(now + 1) + " replica=r" +
                          std::to_string(compact_replica));
    }
  }

  while (!queue.empty()) {
    Event ev = queue.top();
    queue.pop();
    deliver(ev);
  }

  Orswot oracle_state;
  for (const Orswot& oracle : cluster.oracles) oracle_state = merge(oracle_state, oracle);
  out.oracle_state = oracle_state;

  std::vector<Replica*> replicas;
  for (auto& r : cluster.replicas) replicas.push_back(r.get());
  out.report = check_convergence(replicas, cfg.set_name, &oracle_state);

  // Quorum read over R replicas must agree with the oracle as well.
  if (out.report.ok && cfg.read_quorum >= 1) {
    std::vector<ReplicaStream> streams;
    for (int i = 0; i < cfg.read_quorum; ++i) {
      auto cursor = std::make_shared<ReadCursor>(cluster.replicas[i]->read(cfg.set_name));
      streams.push_back(stream_from(std::move(cursor), replica_actor(i)));
    }
    Orswot merged = merge_streams(std::move(streams));
    if (!(merged == oracle_state)) {
      out.report.ok = false;
      out.report.detail = "quorum merge disagrees with oracle";
    }
  }
  return out;
}

Bytes digest_cluster(const Cluster& cluster) {
  ByteWriter w;
  for (size_t i = 0; i < cluster.stores.size(); ++i) {
    auto it = cluster.stores[i]->iterate({});
    while (auto kv = it->next()) {
      w.sized(kv->first);
      w.sized(kv->second);
    }
    StoreMetrics m = cluster.stores[i]->metrics();
    w.u64(m.bytes_read);
    w.u64(m.bytes_written);
    w.u64(m.keys_read);
    w.u64(m.keys_written);
  }
  return w.take();
}

}  // namespace

void ScenarioConfig::validate() const {
  if (n_replicas < 1) throw std::invalid_argument("n_replicas must be >= 1");
  if (op_count < 0) throw std::invalid_argument("op_count must be >= 0");
  if (element_universe < 1) throw std::invalid_argument("element_universe must be >= 1");
  for (double rate : {duplicate_rate, reorder_rate, redeliver_rate, compact_rate}) {
    if (rate < 0.0 || rate > 1.0) throw std::invalid_argument("fault rates must be in [0,1]");
  }
  if (read_quorum < 1 || read_quorum > n_replicas) {
    throw std::invalid_argument("read_quorum must be in [1, n_replicas]");
  }
}

ScenarioConfig parse_scenario_config(const std::string& text) {
  ScenarioConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key=value");
    }
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "seed") cfg.seed = std::stoull(value);
      else if (key == "replicas") cfg.n_replicas = std::stoi(value);
      else if (key == "ops") cfg.op_count = std::stoi(value);
      else if (key == "elements") cfg.element_universe = std::stoi(value);
      else if (key == "duplicate") cfg.duplicate_rate = std::stod(value);
      else if (key == "reorder") cfg.reorder_rate = std::stod(value);
      else if (key == "redeliver") cfg.redeliver_rate = std::stod(value);
      else if (key == "compact") cfg.compact_rate = std::stod(value);
      else if (key == "quorum") cfg.read_quorum = std::stoi(value);
      else if (key == "set") cfg.set_name = value;
      else if (key == "session") {
        if (value == "split") cfg.session = SessionPolicy::ReadWriteSplit;
        else if (value == "same") cfg.session = SessionPolicy::SameReplica;
        else if (value == "blind") cfg.session = SessionPolicy::BlindAdds;
        else throw std::invalid_argument("bad session value");
      } else {
        throw std::invalid_argument("unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": bad value for " + key);
    }
  }
  return cfg;
}

ConvergenceReport check_convergence(const std::vector<Replica*>& replicas, const Bytes& set,
                                    const Orswot* oracle) {
  ConvergenceReport report;
  if (replicas.empty()) return report;

  std::vector<Orswot> states;
  states.reserve(replicas.size());
  for (Replica* replica : replicas) {
    LogicalClock clock = replica->set_clock(set);
    LogicalClock tombstone = replica->set_tombstone(set);
    if (!clock.is_canonical() || !tombstone.is_canonical()) {
      report.ok = false;
      report.detail = "non-canonical clock at replica " + printable(replica->actor());
      return report;
    }
    if (!clock.dominates(tombstone)) {
      report.ok = false;
      report.detail = "tombstone not dominated by set-clock at replica " + printable(replica->actor());
      return report;
    }
    Orswot state = replica->read_all(set);
    if (!state.check_invariants()) {
      report.ok = false;
      report.detail = "malformed read state at replica " + printable(replica->actor());
      return report;
    }
    // Every element key on disk must be covered by the set-clock.
    auto it = replica->store().iterate(element_space_prefix(set), set_end(set));
    while (auto kv = it->next()) {
      BigsetKey key = decode_key(kv->first);
      if (!clock.seen(key.dot)) {
        report.ok = false;
        report.detail = "element key with unseen dot at replica " + printable(replica->actor());
        report.first_differing_element = key.element;
        return report;
      }
    }
    states.push_back(std::move(state));
  }

  auto first_difference = [](const Orswot& a, const Orswot& b) -> Bytes {
    size_t n = std::min(a.entries().size(), b.entries().size());
    for (size_t i = 0; i < n; ++i) {
      if (!(a.entries()[i] == b.entries()[i])) return a.entries()[i].element;
    }
    if (a.entries().size() > n) return a.entries()[n].element;
    if (b.entries().size() > n) return b.entries()[n].element;
    return {};
  };

  for (size_t i = 1; i < states.size(); ++i) {
    if (!(states[i] == states[0])) {
      report.ok = false;
      report.detail = "replica 0 and replica " + std::to_string(i) + " disagree";
      report.first_differing_element = first_difference(states[0], states[i]);
      return report;
    }
  }
  if (oracle != nullptr && !(states[0] == *oracle)) {
    report.ok = false;
    report.detail = "replicas disagree with reference oracle";
    report.first_differing_element = first_difference(states[0], *oracle);
    return report;
  }
  return report;
}

ScenarioResult run_scenario(const ScenarioConfig& cfg, const SimHooks& hooks) {
  cfg.validate();
  RunOutcome outcome = run_once(cfg, hooks, cfg.op_count);

  ScenarioResult result;
  result.trace = outcome.trace;
  result.oracle_state = outcome.oracle_state;
  for (auto& replica : outcome.cluster.replicas) {
    result.replica_states.push_back(replica->read_all(cfg.set_name));
  }
  for (auto& store : outcome.cluster.stores) result.metrics.push_back(store->metrics());
  result.state_digest = digest_cluster(outcome.cluster);
  result.converged = outcome.report.ok;

  if (!outcome.report.ok) {
    Divergence divergence;
    divergence.detail = outcome.report.detail;
    divergence.first_differing_element = outcome.report.first_differing_element;
    divergence.minimized_op_count = cfg.op_count;
    divergence.minimized_trace = outcome.trace;
    // Shrink to the shortest failing op prefix; every prefix replays
    // deterministically from the same seed.
    for (int limit = 1; limit < cfg.op_count; ++limit) {
      RunOutcome shrunk = run_once(cfg, hooks, limit);
      if (!shrunk.report.ok) {
        divergence.minimized_op_count = limit;
        divergence.minimized_trace = shrunk.trace;
        divergence.detail = shrunk.report.detail;
        divergence.first_differing_element = shrunk.report.first_differing_element;
        break;
      }
    }
    result.divergence = std::move(divergence);
  }
  return result;
}

void dump_trace(const std::vector<std::string>& trace, std::ostream& out) {
  for (const auto& line : trace) out << line << '\n';
}

}  // namespace bigset::sim
