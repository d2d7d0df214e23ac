#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <utility>

#include "bigset/orswot.hpp"
#include "bigset/store.hpp"

namespace bigset {

/// Causal context: the dots a client observed for the element(s) it now
/// operates on. Empty means the client observed nothing.
using Context = Dots;

/// The replication unit: one element key plus the operation context it was
/// coordinated with.
struct Delta {
  BigsetKey key;  // Element kind
  Context ctx;

  const Bytes& set() const { return key.set; }
  const Bytes& element() const { return key.element; }
  const Dot& dot() const { return key.dot; }

  friend bool operator==(const Delta&, const Delta&) = default;
};

Bytes encode_delta(const Delta& d);
Delta decode_delta(const Bytes& raw);

inline constexpr size_t kDefaultReadBatch = 10000;

/// Streaming fold over one set's element keyspace. The set-clock and
/// set-tombstone are captured up front (the clock is the read's causal
/// context), elements arrive strictly ascending, and an element is emitted
/// iff it owns at least one dot the tombstone has not seen. Iteration runs
/// on a store snapshot, so concurrent writers do not perturb the stream.
class ReadCursor {
 public:
  const LogicalClock& clock() const { return clock_; }

  /// Next surviving element with its surviving dots.
  std::optional<ElementEntry> next();

  /// Up to batch_size elements; empty means the stream is done.
  std::vector<ElementEntry> next_batch();

  size_t batch_size() const { return batch_size_; }

 private:
  friend class Replica;
  ReadCursor(Store& store, const Bytes& set, const std::optional<Bytes>& from,
             const std::optional<Bytes>& to, size_t batch_size);

  LogicalClock clock_;
  LogicalClock tombstone_;
  std::unique_ptr<StoreIterator> it_;
  std::optional<ElementEntry> acc_;
  size_t batch_size_;
};

/// A vnode: executes coordinated inserts, downstream delta application,
/// removes, streaming reads, targeted membership and range queries, and
/// tombstone-driven compaction against its local store.
///
/// Every write path reads exactly the set's two clock keys and never an
/// element key; that is the whole point of the decomposition. Operations on
/// one replica are serialized by an internal mutex; reads run on snapshots
/// and may overlap writes.
class Replica {
 public:
  Replica(ActorId actor, std::shared_ptr<Store> store);

  /// Coordinated insert: folds the context into the clocks (unseen dots into
  /// the set-clock so the matching inserts can never surface, seen ones into
  /// the tombstone so their keys get compacted), mints the next dot, and
  /// atomically writes both clocks plus the new element key. The returned
  /// delta is what gets replicated downstream.
  Delta coordinate_insert(const Bytes& set, const Bytes& element, const Context& ctx = {});

  /// Several inserts folded into one atomic batch. Equivalent to the
  /// sequential single-element calls in the given order, minus the repeated
  /// clock reads.
  std::vector<Delta> coordinate_insert_many(
      const Bytes& set, std::span<const std::pair<Bytes, Context>> inserts);

  /// Downstream insert: folds the context, then admits the delta's key only
  /// if the set-clock has not seen its dot. Duplicate delivery leaves the
  /// stored bytes untouched (clocks are written if-changed).
  void apply_delta(const Bytes& set, const Delta& delta);

  /// Clock-only removal. An empty context is a no-op: the client observed
  /// nothing, so there is nothing to remove. No element key is touched; the
  /// tombstoned keys disappear at the next compaction.
  void remove(const Bytes& set, const Bytes& element, const Context& ctx);

  void remove_many(const Bytes& set,
                   std::span<const std::pair<Bytes, Context>> removes);

  /// Streaming read of the whole set.
  ReadCursor read(const Bytes& set, size_t batch_size = kDefaultReadBatch) const;

  /// Reads [from, to) in element order; from must not exceed to.
  ReadCursor range_read(const Bytes& set, const Bytes& from, const Bytes& to,
                        size_t batch_size = kDefaultReadBatch) const;

  /// Materialized read: the replica's logical state as a reference set.
  Orswot read_all(const Bytes& set, size_t batch_size = kDefaultReadBatch) const;

  /// Targeted membership: seeks straight to the element's keys, never
  /// touching the rest of the set. The returned context holds the surviving
  /// dots, which is exactly what a client supplies with a follow-up add or
  /// remove of this element.
  std::pair<bool, Context> is_member(const Bytes& set, const Bytes& element) const;

  /// Full-range compaction: physically drops every element key whose dot the
  /// tombstone has seen, then empties the tombstone. The set-clock is
  /// untouched, so reads are value-identical before and after.
  CompactionReport compact_set(const Bytes& set);

  LogicalClock set_clock(const Bytes& set) const;
  LogicalClock set_tombstone(const Bytes& set) const;

  const ActorId& actor() const { return actor_; }
  Store& store() { return *store_; }
  const Store& store() const { return *store_; }

 private:
  struct Clocks {
    LogicalClock clock;
    LogicalClock tombstone;
    bool had_tombstone = false;
  };

  Clocks load_clocks(const Bytes& set) const;
  LogicalClock load_clock(const Bytes& set, KeyKind kind) const;

  ActorId actor_;
  std::shared_ptr<Store> store_;
  mutable std::mutex op_mutex_;
};

}  // namespace bigset
