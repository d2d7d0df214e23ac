#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "bigset/bytes.hpp"

namespace bigset {

/// Actor identifiers are nonempty opaque byte strings, totally ordered by
/// byte comparison.
using ActorId = Bytes;

/// One insertion event: (actor, per-actor counter). Counters start at 1.
struct Dot {
  ActorId actor;
  uint64_t event = 0;

  auto operator<=>(const Dot&) const = default;
};

/// Sorted, duplicate-free dot collection. Operation contexts, per-element
/// entries and streamed batches all use this shape.
using Dots = std::vector<Dot>;

bool contains_dot(const Dots& dots, const Dot& d);
void insert_dot(Dots& dots, const Dot& d);

/// Logical clock: a base version vector plus a cloud of events that are not
/// contiguous with it. Both the set-clock and the set-tombstone are this
/// type.
///
/// The representation is kept maximally compressed at all times:
///   - base entries with counter 0 are absent,
///   - cloud sets are nonempty and contain only events > base for that actor,
///   - base[a]+1 is never in cloud[a] (it would be contiguous).
/// Compression makes the representation canonical: two clocks that have seen
/// the same events compare equal structurally.
class LogicalClock {
 public:
  using Base = std::map<ActorId, uint64_t>;
  using Cloud = std::map<ActorId, std::set<uint64_t>>;

  LogicalClock() = default;

  /// Builds from explicit parts, rejecting non-canonical input. Intended for
  /// tests and decoders; normal code grows clocks through add/merge.
  static LogicalClock from_parts(Base base, Cloud cloud);

  /// True iff the event is covered by the base or present in the cloud.
  bool seen(const Dot& d) const;

  /// Mints the actor's next event and returns its dot. The actor must not
  /// have cloud residue; a replica always sees its own events contiguously,
  /// so residue means the caller fed it foreign dots for its own id.
  Dot increment(const ActorId& actor);

  /// Records the dot, absorbing any newly contiguous cloud events into the
  /// base. Idempotent.
  void add(const Dot& d);

  /// Least upper bound with `other`: pointwise max of bases, union of
  /// clouds, recompressed.
  void merge(const LogicalClock& other);

  /// Removes exactly this event from the seen set. If the event sits inside
  /// the base range, the base is demoted to event-1 and the later events
  /// move into the cloud. Unseen dots are a no-op.
  void subtract(const Dot& d);

  /// True iff every dot seen by `other` is seen by this clock.
  bool dominates(const LogicalClock& other) const;

  /// Base counter for the actor; 0 when absent.
  uint64_t base_of(const ActorId& actor) const;

  /// Largest event seen for the actor (base or cloud); 0 when none.
  uint64_t max_event(const ActorId& actor) const;

  const Base& base() const { return base_; }
  const Cloud& cloud() const { return cloud_; }
  bool empty() const { return base_.empty() && cloud_.empty(); }

  /// Canonical-form check, exposed so harnesses can assert it after every
  /// operation.
  bool is_canonical() const;

  friend bool operator==(const LogicalClock&, const LogicalClock&) = default;

 private:
  void compress(const ActorId& actor);

  Base base_;
  Cloud cloud_;
};

LogicalClock join(LogicalClock a, const LogicalClock& b);
LogicalClock add_dot(LogicalClock c, const Dot& d);
LogicalClock subtract_dot(LogicalClock c, const Dot& d);

/// Clock whose seen set is exactly the given dots.
LogicalClock clock_from_dots(const Dots& dots);

/// Canonical binary form: u32 entry count, then per actor in ascending byte
/// order: u32 id length, id bytes, u64 base counter, u32 cloud count, and the
/// cloud events ascending as u64. All integers big-endian. Byte equality of
/// encodings is used for write-if-changed detection, so the encoding must
/// stay deterministic.
Bytes encode_clock(const LogicalClock& c);
LogicalClock decode_clock(const Bytes& raw);

}  // namespace bigset
