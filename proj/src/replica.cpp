#include "bigset/replica.hpp"

#include <stdexcept>

namespace bigset {

Bytes encode_delta(const Delta& d) {
  ByteWriter w;
  w.sized(encode_key(d.key));
  w.u32(static_cast<uint32_t>(d.ctx.size()));
  for (const Dot& dot : d.ctx) {
    w.sized(dot.actor);
    w.u64(dot.event);
  }
  return w.take();
}

Delta decode_delta(const Bytes& raw) {
  ByteReader r(raw);
  Delta d;
  d.key = decode_key(r.sized());
  if (d.key.kind != KeyKind::Element) {
    throw std::invalid_argument("delta key must be an element key");
  }
  uint32_t n = r.u32();
  d.ctx.reserve(n);
  for (uint32_t i = 0; i < n; ++i) {
    Dot dot;
    dot.actor = r.sized();
    dot.event = r.u64();
    insert_dot(d.ctx, dot);
  }
  r.expect_done();
  return d;
}

ReadCursor::ReadCursor(Store& store, const Bytes& set, const std::optional<Bytes>& from,
                       const std::optional<Bytes>& to, size_t batch_size)
    : batch_size_(batch_size) {
  if (batch_size_ == 0) throw std::invalid_argument("batch size must be positive");
  if (auto raw = store.get(encode_key(BigsetKey::clock_key(set)))) {
    clock_ = decode_clock(*raw);
  }
  if (auto raw = store.get(encode_key(BigsetKey::tombstone_key(set)))) {
    tombstone_ = decode_clock(*raw);
  }
  Bytes seek = from ? element_prefix(set, *from) : element_space_prefix(set);
  Bytes bound = to ? element_prefix(set, *to) : set_end(set);
  it_ = store.iterate(seek, bound);
}

std::optional<ElementEntry> ReadCursor::next() {
  while (true) {
    auto kv = it_->next();
    if (!kv) {
      if (acc_ && !acc_->dots.empty()) {
        auto out = std::move(*acc_);
        acc_.reset();
        return out;
      }
      return std::nullopt;
    }
    BigsetKey key = decode_key(kv->first);
    if (!acc_ || acc_->element != key.element) {
      if (acc_ && !acc_->dots.empty()) {
        auto out = std::move(*acc_);
        acc_ = ElementEntry{std::move(key.element), {}};
        if (!tombstone_.seen(key.dot)) acc_->dots.push_back(std::move(key.dot));
        return out;
      }
      acc_ = ElementEntry{std::move(key.element), {}};
    }
    // Key order within an element is (actor, event), so dots arrive sorted.
    if (!tombstone_.seen(key.dot)) acc_->dots.push_back(std::move(key.dot));
  }
}

std::vector<ElementEntry> ReadCursor::next_batch() {
  std::vector<ElementEntry> batch;
  while (batch.size() < batch_size_) {
    auto entry = next();
    if (!entry) break;
    batch.push_back(std::move(*entry));
  }
  return batch;
}

Replica::Replica(ActorId actor, std::shared_ptr<Store> store)
    : actor_(std::move(actor)), store_(std::move(store)) {
  if (actor_.empty()) throw std::invalid_argument("replica actor id must be nonempty");
  if (!store_) throw std::invalid_argument("replica needs a store");
}

LogicalClock Replica::load_clock(const Bytes& set, KeyKind kind) const {
  Bytes key = encode_key(kind == KeyKind::Clock ? BigsetKey::clock_key(set)
                                                : BigsetKey::tombstone_key(set));
  if (auto raw = store_->get(key)) return decode_clock(*raw);
  return LogicalClock{};
}

Replica::Clocks Replica::load_clocks(const Bytes& set) const {
  Clocks c;
  if (auto raw = store_->get(encode_key(BigsetKey::clock_key(set)))) {
    c.clock = decode_clock(*raw);
  }
  if (auto raw = store_->get(encode_key(BigsetKey::tombstone_key(set)))) {
    c.tombstone = decode_clock(*raw);
    c.had_tombstone = true;
  }
  return c;
}

Delta Replica::coordinate_insert(const Bytes& set, const Bytes& element, const Context& ctx) {
  std::pair<Bytes, Context> one[] = {{element, ctx}};
  return coordinate_insert_many(set, one).front();
}

std::vector<Delta> Replica::coordinate_insert_many(
    const Bytes& set, std::span<const std::pair<Bytes, Context>> inserts) {
  std::lock_guard lock(op_mutex_);
  auto [clock, tombstone, had_tombstone] = load_clocks(set);
  (void)had_tombstone;

  std::vector<Delta> deltas;
  deltas.reserve(inserts.size());
  WriteBatch batch;
  for (const auto& [element, ctx] : inserts) {
    for (const Dot& d : ctx) {
      if (!clock.seen(d)) {
        clock.add(d);  // unseen adds must never surface later
      } else {
        tombstone.add(d);  // seen adds are superseded; compaction reaps them
      }
    }
    Dot dot = clock.increment(actor_);
    BigsetKey key = BigsetKey::element_key(set, element, dot);
    batch.put(encode_key(key), Bytes{});
    deltas.push_back(Delta{std::move(key), ctx});
  }
  batch.put(encode_key(BigsetKey::clock_key(set)), encode_clock(clock));
  batch.put(encode_key(BigsetKey::tombstone_key(set)), encode_clock(tombstone));
  store_->apply(batch);
  return deltas;
}

void Replica::apply_delta(const Bytes& set, const Delta& delta) {
  if (delta.key.kind != KeyKind::Element) {
    throw std::invalid_argument("apply_delta: delta must carry an element key");
  }
  if (delta.key.set != set) {
    throw std::invalid_argument("apply_delta: delta belongs to a different set");
  }
  std::lock_guard lock(op_mutex_);
  auto [clock, tombstone, had_tombstone] = load_clocks(set);

  for (const Dot& d : delta.ctx) {
    if (!clock.seen(d)) {
      clock.add(d);
    } else {
      tombstone.add(d);
    }
  }

  WriteBatch batch;
  if (!clock.seen(delta.key.dot)) {
    clock.add(delta.key.dot);
    batch.put(encode_key(BigsetKey::clock_key(set)), encode_clock(clock));
    batch.put(encode_key(BigsetKey::tombstone_key(set)), encode_clock(tombstone));
    batch.put(encode_key(delta.key), Bytes{});
  } else {
    // Already seen: no key to write, and the clocks only go to disk if the
    // context actually changed them.
    batch.put_if_changed(encode_key(BigsetKey::clock_key(set)), encode_clock(clock));
    if (had_tombstone || !tombstone.empty()) {
      batch.put_if_changed(encode_key(BigsetKey::tombstone_key(set)), encode_clock(tombstone));
    }
  }
  store_->apply(batch);
}

void Replica::remove(const Bytes& set, const Bytes& element, const Context& ctx) {
  std::pair<Bytes, Context> one[] = {{element, ctx}};
  remove_many(set, one);
}

void Replica::remove_many(const Bytes& set,
                          std::span<const std::pair<Bytes, Context>> removes) {
  std::lock_guard lock(op_mutex_);
  auto [clock, tombstone, had_tombstone] = load_clocks(set);

  bool touched = false;
  for (const auto& [element, ctx] : removes) {
    (void)element;  // removal is context-driven; the name is for callers and traces
    for (const Dot& d : ctx) {
      touched = true;
      if (clock.seen(d)) {
        tombstone.add(d);
      } else {
        clock.add(d);
      }
    }
  }
  if (!touched) return;  // nothing observed, nothing to do

  WriteBatch batch;
  batch.put(encode_key(BigsetKey::clock_key(set)), encode_clock(clock));
  batch.put(encode_key(BigsetKey::tombstone_key(set)), encode_clock(tombstone));
  store_->apply(batch);
}

ReadCursor Replica::read(const Bytes& set, size_t batch_size) const {
  return ReadCursor(*store_, set, std::nullopt, std::nullopt, batch_size);
}

ReadCursor Replica::range_read(const Bytes& set, const Bytes& from, const Bytes& to,
                               size_t batch_size) const {
  if (from > to) throw std::invalid_argument("range_read: from exceeds to");
  return ReadCursor(*store_, set, from, to, batch_size);
}

Orswot Replica::read_all(const Bytes& set, size_t batch_size) const {
  ReadCursor cursor = read(set, batch_size);
  Entries entries;
  while (true) {
    auto batch = cursor.next_batch();
    if (batch.empty()) break;
    for (auto& entry : batch) entries.push_back(std::move(entry));
  }
  return Orswot{cursor.clock(), std::move(entries)};
}

std::pair<bool, Context> Replica::is_member(const Bytes& set, const Bytes& element) const {
  LogicalClock tombstone = load_clock(set, KeyKind::Tombstone);
  auto it = store_->iterate(element_prefix(set, element), element_end(set, element));
  Context surviving;
  while (auto kv = it->next()) {
    BigsetKey key = decode_key(kv->first);
    if (!tombstone.seen(key.dot)) surviving.push_back(std::move(key.dot));
  }
  return {!surviving.empty(), std::move(surviving)};
}

CompactionReport Replica::compact_set(const Bytes& set) {
  std::lock_guard lock(op_mutex_);
  auto [clock, tombstone, had_tombstone] = load_clocks(set);
  (void)clock;

  CompactionFilter filter;
  filter.decide = [&set, &tombstone](const BigsetKey& key, const Bytes&) {
    bool drop = key.kind == KeyKind::Element && key.set == set && tombstone.seen(key.dot);
    return drop ? CompactionDecision::Drop : CompactionDecision::Keep;
  };
  CompactionReport report = store_->compact(filter);

  for (const BigsetKey& key : report.dropped) tombstone.subtract(key.dot);
  // Context dots that took the unseen branch elsewhere never had a local
  // key; the full pass confirmed nothing references what is left, so the
  // tombstone resets to empty rather than stranding them.
  tombstone = LogicalClock{};

  if (had_tombstone) {
    WriteBatch batch;
    batch.put_if_changed(encode_key(BigsetKey::tombstone_key(set)), encode_clock(tombstone));
    store_->apply(batch);
  }
  return report;
}

LogicalClock Replica::set_clock(const Bytes& set) const {
  return load_clock(set, KeyKind::Clock);
}

LogicalClock Replica::set_tombstone(const Bytes& set) const {
  return load_clock(set, KeyKind::Tombstone);
}

}  // namespace bigset
