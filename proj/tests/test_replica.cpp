#include <doctest.h>

#include "bigset/replica.hpp"
#include "testgen.hpp"

using namespace bigset;
using testgen::Gen;

namespace {

struct Fixture {
  std::shared_ptr<MemStore> store = std::make_shared<MemStore>();
  Replica replica{"a", store};
  Bytes set = "s";
};

uint64_t element_key_count(Store& store, const Bytes& set) {
  uint64_t n = 0;
  auto it = store.iterate(element_space_prefix(set), set_end(set));
  while (it->next()) ++n;
  return n;
}

LogicalClock clock_of(std::initializer_list<std::pair<ActorId, uint64_t>> base) {
  LogicalClock::Base b;
  for (const auto& [actor, counter] : base) b[actor] = counter;
  return LogicalClock::from_parts(std::move(b), {});
}

}  // namespace

TEST_CASE("first insert: clock, empty tombstone, one element key") {
  Fixture f;
  Delta delta = f.replica.coordinate_insert(f.set, "x", {});
  CHECK(delta.key == BigsetKey::element_key("s", "x", Dot{"a", 1}));
  CHECK(delta.ctx.empty());
  CHECK(f.replica.set_clock(f.set) == clock_of({{"a", 1}}));
  CHECK(f.replica.set_tombstone(f.set) == LogicalClock{});
  CHECK(element_key_count(*f.store, f.set) == 1);
}

TEST_CASE("re-insert with observed context tombstones the old dot") {
  Fixture f;
  f.replica.coordinate_insert(f.set, "x", {});
  f.replica.coordinate_insert(f.set, "x", Context{Dot{"a", 1}});

  CHECK(f.replica.set_clock(f.set) == clock_of({{"a", 2}}));
  CHECK(f.replica.set_tombstone(f.set) == clock_of({{"a", 1}}));
  // Both keys exist until compaction, but the read shows x exactly once,
  // owned by the superseding dot.
  CHECK(element_key_count(*f.store, f.set) == 2);
  Orswot state = f.replica.read_all(f.set);
  CHECK(state.value() == std::vector<Bytes>{"x"});
  CHECK(*state.find("x") == Dots{Dot{"a", 2}});
}

TEST_CASE("unseen context dots land in the set-clock, not the tombstone") {
  Fixture f;
  f.replica.coordinate_insert(f.set, "x", Context{Dot{"b", 5}});
  CHECK(f.replica.set_clock(f.set) ==
        LogicalClock::from_parts({{"a", 1}}, {{"b", {5}}}));
  CHECK(f.replica.set_tombstone(f.set) == LogicalClock{});
}

TEST_CASE("downstream delta application") {
  Fixture f;
  Delta delta = f.replica.coordinate_insert(f.set, "x", {});

  auto store_b = std::make_shared<MemStore>();
  Replica b("b", store_b);
  b.apply_delta(f.set, delta);
  CHECK(b.set_clock(f.set) == clock_of({{"a", 1}}));
  CHECK(b.read_all(f.set).value() == std::vector<Bytes>{"x"});

  // Duplicate delivery leaves the stored bytes untouched.
  StoreMetrics before = store_b->metrics();
  b.apply_delta(f.set, delta);
  CHECK(store_b->metrics().bytes_written == before.bytes_written);
  CHECK(store_b->metrics().keys_written == before.keys_written);

  // A delta whose context was already seen sends the dot to the tombstone
  // and the superseded element disappears after compaction.
  Delta second = f.replica.coordinate_insert(f.set, "x", Context{Dot{"a", 1}});
  b.apply_delta(f.set, second);
  CHECK(b.read_all(f.set).value() == std::vector<Bytes>{"x"});
  CHECK(b.set_tombstone(f.set) == clock_of({{"a", 1}}));
  b.compact_set(f.set);
  CHECK(element_key_count(*store_b, f.set) == 1);
  Orswot state = b.read_all(f.set);
  CHECK(*state.find("x") == Dots{Dot{"a", 2}});
}

TEST_CASE("remove: seen context goes to the tombstone") {
  Fixture f;
  f.replica.coordinate_insert(f.set, "x", {});
  f.replica.remove(f.set, "x", Context{Dot{"a", 1}});
  CHECK(f.replica.set_tombstone(f.set) == clock_of({{"a", 1}}));
  CHECK(f.replica.read_all(f.set).value().empty());
  CHECK(f.replica.set_clock(f.set) == clock_of({{"a", 1}}));
}

TEST_CASE("remove: unseen context blocks the insert forever") {
  Fixture f;
  f.replica.remove(f.set, "x", Context{Dot{"c", 3}});
  CHECK(f.replica.set_clock(f.set) == LogicalClock::from_parts({}, {{"c", {3}}}));
  CHECK(f.replica.set_tombstone(f.set) == LogicalClock{});

  Delta late{BigsetKey::element_key(f.set, "x", Dot{"c", 3}), {}};
  f.replica.apply_delta(f.set, late);
  CHECK(f.replica.read_all(f.set).value().empty());
  CHECK(element_key_count(*f.store, f.set) == 0);
}

TEST_CASE("remove with empty context is a no-op") {
  Fixture f;
  f.replica.coordinate_insert(f.set, "x", {});
  Bytes clock_before = *f.store->get(encode_key(BigsetKey::clock_key(f.set)));
  StoreMetrics before = f.store->metrics();
  f.replica.remove(f.set, "x", {});
  CHECK(f.store->metrics().bytes_written == before.bytes_written);
  CHECK(*f.store->get(encode_key(BigsetKey::clock_key(f.set))) == clock_before);
}

TEST_CASE("write paths read only the two clock keys, at any cardinality") {
  Fixture f;
  auto downstream_store = std::make_shared<MemStore>();
  Replica downstream("b", downstream_store);

  auto keys_read_during = [](Store& store, auto&& fn) {
    StoreMetrics before = store.metrics();
    fn();
    return (store.metrics() - before).keys_read;
  };

  for (uint64_t n : {100u, 5000u}) {
    // Grow the set to n elements.
    std::vector<std::pair<Bytes, Context>> fill;
    for (uint64_t i = element_key_count(*f.store, f.set); i < n; ++i) {
      fill.emplace_back("e" + std::to_string(i), Context{});
    }
    auto deltas = f.replica.coordinate_insert_many(f.set, fill);
    for (const Delta& d : deltas) downstream.apply_delta(f.set, d);

    CHECK(keys_read_during(*f.store, [&] {
            f.replica.coordinate_insert(f.set, "probe", {});
          }) <= 2);
    Delta delta = f.replica.coordinate_insert(f.set, "probe2", {});
    CHECK(keys_read_during(*downstream_store, [&] {
            downstream.apply_delta(f.set, delta);
          }) <= 2);
    CHECK(keys_read_during(*f.store, [&] {
            f.replica.remove(f.set, "e1", Context{Dot{"a", 2}});
          }) <= 2);
  }
}

TEST_CASE("is_member touches one element's keys plus a clock, independent of n") {
  Fixture f;
  std::vector<std::pair<Bytes, Context>> small, large;
  for (int i = 0; i < 100; ++i) small.emplace_back("e" + std::to_string(i), Context{});
  f.replica.coordinate_insert_many(f.set, small);

  auto probe_cost = [&f](const Bytes& element) {
    StoreMetrics before = f.store->metrics();
    auto [member, ctx] = f.replica.is_member(f.set, element);
    (void)member;
    (void)ctx;
    return (f.store->metrics() - before).keys_read;
  };

  uint64_t cost_small = probe_cost("e42");
  for (int i = 100; i < 10000; ++i) large.emplace_back("e" + std::to_string(i), Context{});
  f.replica.coordinate_insert_many(f.set, large);
  uint64_t cost_large = probe_cost("e42");
  CHECK(cost_small == cost_large);
  CHECK(cost_small <= 3);

  auto [member, ctx] = f.replica.is_member(f.set, "e42");
  CHECK(member);
  CHECK(ctx.size() == 1);
  auto [absent, empty_ctx] = f.replica.is_member(f.set, "nope");
  CHECK_FALSE(absent);
  CHECK(empty_ctx.empty());
}

TEST_CASE("membership flips with add and remove") {
  Fixture f;
  f.replica.coordinate_insert(f.set, "x", {});
  auto [member, ctx] = f.replica.is_member(f.set, "x");
  CHECK(member);
  CHECK(ctx == Context{Dot{"a", 1}});

  f.replica.remove(f.set, "x", ctx);
  auto [still, ctx2] = f.replica.is_member(f.set, "x");
  CHECK_FALSE(still);
  CHECK(ctx2.empty());
}

TEST_CASE("read streams batches in ascending order with the clock up front") {
  Fixture f;
  std::vector<std::pair<Bytes, Context>> fill;
  for (int i = 0; i < 25; ++i) fill.emplace_back("e" + std::to_string(i), Context{});
  f.replica.coordinate_insert_many(f.set, fill);

  ReadCursor cursor = f.replica.read(f.set, 10);
  CHECK(cursor.clock() == f.replica.set_clock(f.set));
  std::vector<size_t> batch_sizes;
  Bytes previous;
  size_t total = 0;
  while (true) {
    auto batch = cursor.next_batch();
    if (batch.empty()) break;
    batch_sizes.push_back(batch.size());
    for (const auto& entry : batch) {
      CHECK(previous < entry.element);
      previous = entry.element;
      ++total;
    }
  }
  CHECK(total == 25);
  CHECK(batch_sizes == std::vector<size_t>{10, 10, 5});

  // Reconstructing a reference set from the stream equals the logical state.
  Orswot state = f.replica.read_all(f.set);
  CHECK(state.check_invariants());
  CHECK(state.value().size() == 25);
}

TEST_CASE("read cursor defaults to 10000-element batches") {
  Fixture f;
  f.replica.coordinate_insert(f.set, "x", {});
  CHECK(f.replica.read(f.set).batch_size() == 10000);
  CHECK(kDefaultReadBatch == 10000);
}

TEST_CASE("range reads paginate without gaps or overlap") {
  Fixture f;
  Gen g(0x7a9e);
  std::vector<std::pair<Bytes, Context>> fill;
  for (int i = 0; i < 40; ++i) fill.emplace_back("e" + std::to_string(10 + i), Context{});
  f.replica.coordinate_insert_many(f.set, fill);

  Orswot everything = f.replica.read_all(f.set);

  // Full range equals read.
  ReadCursor full = f.replica.range_read(f.set, "", Bytes("\xff", 1), 100);
  std::vector<ElementEntry> entries;
  while (auto e = full.next()) entries.push_back(std::move(*e));
  CHECK(entries == everything.entries());

  // Empty range yields nothing.
  ReadCursor empty = f.replica.range_read(f.set, "e20", "e20");
  CHECK_FALSE(empty.next().has_value());
  CHECK_THROWS_AS(f.replica.range_read(f.set, "z", "a"), std::invalid_argument);

  // Adjacent random splits concatenate to the full read.
  for (int round = 0; round < 50; ++round) {
    Bytes mid1 = "e" + std::to_string(g.i(5, 60));
    Bytes mid2 = "e" + std::to_string(g.i(5, 60));
    if (mid2 < mid1) std::swap(mid1, mid2);
    std::vector<ElementEntry> stitched;
    for (auto [lo, hi] : std::vector<std::pair<Bytes, Bytes>>{
             {"", mid1}, {mid1, mid2}, {mid2, Bytes("\xff", 1)}}) {
      ReadCursor cursor = f.replica.range_read(f.set, lo, hi, 7);
      while (auto e = cursor.next()) stitched.push_back(std::move(*e));
    }
    CHECK(stitched == everything.entries());
  }
}

TEST_CASE("add then remove then compact leaves an empty set and empty tombstone") {
  Fixture f;
  f.replica.coordinate_insert(f.set, "x", {});
  f.replica.remove(f.set, "x", Context{Dot{"a", 1}});
  CompactionReport report = f.replica.compact_set(f.set);
  CHECK(report.dropped.size() == 1);
  CHECK(element_key_count(*f.store, f.set) == 0);
  CHECK(f.replica.set_tombstone(f.set) == LogicalClock{});
  CHECK(f.replica.set_clock(f.set) == clock_of({{"a", 1}}));
}

TEST_CASE("compaction with an empty tombstone is a no-op") {
  Fixture f;
  f.replica.coordinate_insert(f.set, "x", {});
  StoreMetrics before = f.store->metrics();
  CompactionReport report = f.replica.compact_set(f.set);
  CHECK(report.dropped.empty());
  CHECK(element_key_count(*f.store, f.set) == 1);
  CHECK(f.store->metrics().bytes_written == before.bytes_written);
}

TEST_CASE("compaction only touches its own set") {
  Fixture f;
  f.replica.coordinate_insert("other", "y", {});
  f.replica.coordinate_insert(f.set, "x", {});
  f.replica.remove(f.set, "x", Context{Dot{"a", 1}});
  f.replica.compact_set(f.set);
  CHECK(element_key_count(*f.store, "other") == 1);
  CHECK(f.replica.read_all("other").value() == std::vector<Bytes>{"y"});
}

TEST_CASE("property: compaction preserves the read value on random histories") {
  Gen g(0xabba);
  for (int round = 0; round < 60; ++round) {
    Fixture f;
    for (int op = g.i(1, 40); op > 0; --op) {
      Bytes element = "e" + std::to_string(g.i(0, 7));
      auto [member, ctx] = f.replica.is_member(f.set, element);
      (void)member;
      if (g.chance(0.65)) {
        f.replica.coordinate_insert(f.set, element, g.chance(0.5) ? ctx : Context{});
      } else {
        f.replica.remove(f.set, element, ctx);
      }
    }
    Orswot before = f.replica.read_all(f.set);
    f.replica.compact_set(f.set);
    Orswot after = f.replica.read_all(f.set);
    CHECK(before == after);
    CHECK(f.replica.set_tombstone(f.set) == LogicalClock{});
    CHECK(f.replica.set_clock(f.set).dominates(before.clock()));
  }
}

TEST_CASE("multi-element batches equal sequential single ops") {
  Gen g(0x3141);
  for (int round = 0; round < 40; ++round) {
    auto store_batch = std::make_shared<MemStore>();
    auto store_seq = std::make_shared<MemStore>();
    Replica batched("a", store_batch);
    Replica sequential("a", store_seq);

    std::vector<std::pair<Bytes, Context>> ops;
    for (int i = g.i(1, 6); i > 0; --i) {
      Context ctx;
      if (g.chance(0.3)) ctx = Context{Dot{"b", g.u64(1, 6)}};
      ops.emplace_back("e" + std::to_string(g.i(0, 5)), std::move(ctx));
    }

    auto batch_deltas = batched.coordinate_insert_many("s", ops);
    std::vector<Delta> seq_deltas;
    for (const auto& [element, ctx] : ops) {
      seq_deltas.push_back(sequential.coordinate_insert("s", element, ctx));
    }
    CHECK(batch_deltas == seq_deltas);
    CHECK(batched.read_all("s") == sequential.read_all("s"));
    CHECK(batched.set_clock("s") == sequential.set_clock("s"));
    CHECK(batched.set_tombstone("s") == sequential.set_tombstone("s"));

    batched.remove_many("s", ops);
    for (const auto& [element, ctx] : ops) sequential.remove("s", element, ctx);
    CHECK(batched.read_all("s") == sequential.read_all("s"));
    CHECK(batched.set_tombstone("s") == sequential.set_tombstone("s"));
  }
}

TEST_CASE("tombstone stays dominated by the set-clock") {
  Gen g(0x7541);
  Fixture f;
  auto peer_store = std::make_shared<MemStore>();
  Replica peer("b", peer_store);
  for (int op = 0; op < 120; ++op) {
    Bytes element = "e" + std::to_string(g.i(0, 5));
    auto ctx = f.replica.is_member(f.set, element).second;
    if (g.chance(0.5)) {
      Delta d = peer.coordinate_insert(f.set, element, {});
      f.replica.apply_delta(f.set, d);
    } else if (g.chance(0.5)) {
      f.replica.coordinate_insert(f.set, element, ctx);
    } else {
      f.replica.remove(f.set, element, ctx);
    }
    CHECK(f.replica.set_clock(f.set).dominates(f.replica.set_tombstone(f.set)));
    CHECK(f.replica.set_clock(f.set).is_canonical());
    CHECK(f.replica.set_tombstone(f.set).is_canonical());
  }
}

TEST_CASE("replica works identically over the durable backend") {
  auto dir = std::filesystem::temp_directory_path() / "bigset_replica_log_test";
  std::filesystem::create_directories(dir);
  auto file = dir / "replica.log";
  std::filesystem::remove(file);
  {
    auto store = std::make_shared<LogStore>(file);
    Replica replica("a", store);
    replica.coordinate_insert("s", "x", {});
    replica.coordinate_insert("s", "y", {});
    replica.remove("s", "x", Context{Dot{"a", 1}});
  }
  {
    auto store = std::make_shared<LogStore>(file);
    Replica replica("a", store);
    CHECK(replica.read_all("s").value() == std::vector<Bytes>{"y"});
    replica.compact_set("s");
    CHECK(replica.read_all("s").value() == std::vector<Bytes>{"y"});
  }
  std::filesystem::remove_all(dir);
}
