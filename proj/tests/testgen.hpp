#pragma once

// Shared generators and independent oracles for the property suites. The
// oracles here deliberately avoid the code paths they check: key ordering is
// re-derived from tuple comparison, clock semantics from brute-force seen()
// probing, and merges from the reference set fold.

#include <algorithm>
#include <random>
#include <vector>

#include "bigset/keys.hpp"
#include "bigset/orswot.hpp"

namespace bigset::testgen {

class Gen {
 public:
  explicit Gen(uint64_t seed) : rng_(seed) {}

  uint64_t u64(uint64_t lo, uint64_t hi) {
    return std::uniform_int_distribution<uint64_t>(lo, hi)(rng_);
  }
  int i(int lo, int hi) { return static_cast<int>(u64(lo, hi)); }
  bool chance(double p) { return std::uniform_real_distribution<double>(0, 1)(rng_) < p; }

  std::mt19937_64& rng() { return rng_; }

  /// Byte strings over a hostile alphabet: embedded zero bytes, the escape
  /// and terminator bytes, and 0xff.
  Bytes bytes(size_t min_len, size_t max_len) {
    static const char alphabet[] = {'\x00', '\x01', '\x02', '\xff', 'a', 'b', 'z', '\x7f'};
    size_t len = u64(min_len, max_len);
    Bytes out;
    out.reserve(len);
    for (size_t k = 0; k < len; ++k) out.push_back(alphabet[u64(0, sizeof(alphabet) - 1)]);
    return out;
  }

  ActorId actor() {
    static const ActorId pool[] = {"a", "b", "c", Bytes("d\x00g", 3), "ee", Bytes("\xff", 1)};
    return pool[u64(0, std::size(pool) - 1)];
  }

  Dot dot(uint64_t max_event = 24) { return Dot{actor(), u64(1, max_event)}; }

  LogicalClock clock(int max_dots = 12, uint64_t max_event = 24) {
    LogicalClock c;
    int n = i(0, max_dots);
    for (int k = 0; k < n; ++k) c.add(dot(max_event));
    return c;
  }

  /// Arbitrary invariant-satisfying reference set: entries only carry dots
  /// the clock has seen.
  Orswot orswot(int max_elements = 6) {
    LogicalClock c = clock();
    Entries entries;
    int n = i(0, max_elements);
    for (int k = 0; k < n; ++k) {
      Bytes element = "e" + std::to_string(i(0, 9));
      Dots dots;
      for (int d = i(1, 3); d > 0; --d) {
        ActorId a = actor();
        uint64_t top = c.max_event(a);
        if (top == 0) continue;
        // Bias toward seen events; max_event can exceed cloud gaps, so filter.
        Dot candidate{a, u64(1, top)};
        if (c.seen(candidate)) insert_dot(dots, candidate);
      }
      if (dots.empty()) continue;
      bool duplicate = false;
      for (const auto& e : entries) duplicate |= e.element == element;
      if (!duplicate) entries.push_back({std::move(element), std::move(dots)});
    }
    std::sort(entries.begin(), entries.end(),
              [](const ElementEntry& x, const ElementEntry& y) { return x.element < y.element; });
    return Orswot{std::move(c), std::move(entries)};
  }

  /// Divergent replicas of one history: a shared op prefix, then independent
  /// suffixes per replica. Same dots show up at several replicas, some
  /// removed at one and alive at another, which is the shape quorum merges
  /// actually see.
  std::vector<Orswot> fork_states(int n_replicas, int shared_ops = 8, int fork_ops = 6) {
    Orswot base;
    apply_random_ops(base, "h", shared_ops);
    std::vector<Orswot> replicas(n_replicas, base);
    for (int r = 0; r < n_replicas; ++r) {
      apply_random_ops(replicas[r], "f" + std::to_string(r), fork_ops);
      // Occasionally let one replica learn another's state so far.
      if (r > 0 && chance(0.4)) replicas[r] = merge(replicas[r], replicas[r - 1]);
    }
    return replicas;
  }

 private:
  void apply_random_ops(Orswot& s, const ActorId& actor_id, int ops) {
    for (int k = 0; k < ops; ++k) {
      Bytes element = "e" + std::to_string(i(0, 9));
      if (chance(0.7)) {
        s.add(actor_id, element);
      } else {
        s.remove(element);
      }
    }
  }

  std::mt19937_64 rng_;
};

/// Independent ordering oracle: compare keys as tuples, the way the encoding
/// is contracted to behave.
inline int tuple_compare(const BigsetKey& a, const BigsetKey& b) {
  auto cmp_bytes = [](const Bytes& x, const Bytes& y) {
    return x < y ? -1 : (y < x ? 1 : 0);
  };
  if (int c = cmp_bytes(a.set, b.set)) return c;
  if (a.kind != b.kind) return static_cast<int>(a.kind) < static_cast<int>(b.kind) ? -1 : 1;
  if (a.kind != KeyKind::Element) return 0;
  if (int c = cmp_bytes(a.element, b.element)) return c;
  if (int c = cmp_bytes(a.dot.actor, b.dot.actor)) return c;
  if (a.dot.event != b.dot.event) return a.dot.event < b.dot.event ? -1 : 1;
  return 0;
}

inline BigsetKey random_key(Gen& g) {
  int kind = g.i(0, 9);
  Bytes set = g.bytes(0, 4);
  if (kind == 0) return BigsetKey::clock_key(set);
  if (kind == 1) return BigsetKey::tombstone_key(set);
  ActorId actor = g.bytes(1, 4);
  static const uint64_t events[] = {1, 2, 3, 254, 255, 256, 65535, 1ull << 32,
                                    (1ull << 56) - 1, 0xff00000000000000ull, UINT64_MAX};
  uint64_t event = g.chance(0.5) ? g.u64(1, 40) : events[g.u64(0, std::size(events) - 1)];
  return BigsetKey::element_key(set, g.bytes(0, 5), Dot{actor, event});
}

/// Mutates one key into a near neighbor so prefix relationships get covered.
inline BigsetKey perturb_key(Gen& g, BigsetKey k) {
  switch (g.i(0, 5)) {
    case 0: k.set += g.bytes(1, 2); break;
    case 1:
      if (!k.set.empty()) k.set.pop_back();
      break;
    case 2:
      if (k.kind == KeyKind::Element) k.element += g.bytes(1, 2);
      break;
    case 3:
      if (k.kind == KeyKind::Element) k.dot.actor += g.bytes(1, 2);
      break;
    case 4:
      if (k.kind == KeyKind::Element) k.dot.event = g.u64(1, UINT64_MAX);
      break;
    default: k.kind = static_cast<KeyKind>(g.i(1, 3)); break;
  }
  if (k.kind != KeyKind::Element) {
    k.element.clear();
    k.dot = Dot{};
  } else if (k.dot.actor.empty()) {
    k.dot.actor = "a";
    k.dot.event = std::max<uint64_t>(1, k.dot.event);
  }
  if (k.kind == KeyKind::Element && k.dot.event == 0) k.dot.event = 1;
  return k;
}

/// Probe dots covering everything either clock can distinguish: per actor,
/// events 1..max+1.
inline Dots probe_dots(const LogicalClock& a, const LogicalClock& b) {
  std::vector<ActorId> actors;
  auto collect = [&actors](const LogicalClock& c) {
    for (const auto& [actor, _] : c.base()) actors.push_back(actor);
    for (const auto& [actor, _] : c.cloud()) actors.push_back(actor);
  };
  collect(a);
  collect(b);
  std::sort(actors.begin(), actors.end());
  actors.erase(std::unique(actors.begin(), actors.end()), actors.end());
  Dots probes;
  for (const ActorId& actor : actors) {
    uint64_t top = std::max(a.max_event(actor), b.max_event(actor)) + 1;
    for (uint64_t e = 1; e <= top; ++e) probes.push_back(Dot{actor, e});
  }
  return probes;
}

/// Semantic clock equality: identical seen() over every distinguishable dot.
inline bool seen_equivalent(const LogicalClock& a, const LogicalClock& b) {
  for (const Dot& d : probe_dots(a, b)) {
    if (a.seen(d) != b.seen(d)) return false;
  }
  return true;
}

}  // namespace bigset::testgen
