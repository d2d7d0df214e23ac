#pragma once

#include <vector>

#include "bigset/bytes.hpp"
#include "bigset/clock.hpp"

namespace bigset {

/// One element with its surviving insertion dots. Shared by the reference
/// set, replica read streams and the streaming merge.
struct ElementEntry {
  Bytes element;
  Dots dots;

  friend bool operator==(const ElementEntry&, const ElementEntry&) = default;
};

/// Entries sorted by element; each dot list sorted and nonempty.
using Entries = std::vector<ElementEntry>;

/// Reference state-based observe-remove set: a logical clock plus element ->
/// dots. Removal drops dots; the clock remembers them, which is what makes a
/// merge distinguish "removed" from "never seen". Serves as the semantic
/// oracle for the decomposed implementation and as the full-state / delta
/// replication baselines.
class Orswot {
 public:
  Orswot() = default;
  Orswot(LogicalClock clock, Entries entries)
      : clock_(std::move(clock)), entries_(std::move(entries)) {}

  /// Local add: the actor is the replica, so every existing dot for the
  /// element has been observed here and the new event supersedes them all.
  /// Returns the minted dot.
  Dot add(const ActorId& actor, const Bytes& element);

  /// Context-scoped add: supersedes exactly the dots the client observed.
  /// Unobserved concurrent dots survive. Context dots are absorbed into the
  /// clock so their insertions can never surface later.
  Dot add(const ActorId& actor, const Bytes& element, const Dots& ctx);

  /// Local observed-remove: drops the element outright. Removing an absent
  /// element is a no-op.
  void remove(const Bytes& element);

  /// Context-scoped remove: drops only the observed dots and absorbs them
  /// into the clock, so unseen adds never surface and seen ones stay dead.
  void remove(const Bytes& element, const Dots& ctx);

  /// Local add that also returns the replication fragment: the new entry
  /// plus a clock covering exactly the superseded dots and the new one.
  /// Downstream applies it with join_delta.
  Orswot add_delta(const ActorId& actor, const Bytes& element);

  /// Merges a delta fragment into this state. An incoming delta never
  /// supersedes the local state; it is always merged.
  void join_delta(const Orswot& delta);

  /// Downstream mirror of a decomposed-replica insert: fold the context,
  /// then admit the dot only if this clock has not seen it.
  void apply_delta(const Bytes& element, const Dot& dot, const Dots& ctx);

  /// Sorted list of present elements.
  std::vector<Bytes> value() const;

  const Dots* find(const Bytes& element) const;
  const LogicalClock& clock() const { return clock_; }
  const Entries& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  /// Structural health: entries sorted, dot lists sorted and nonempty, every
  /// dot seen by the clock.
  bool check_invariants() const;

  friend bool operator==(const Orswot&, const Orswot&) = default;

  friend Orswot merge(const Orswot& a, const Orswot& b);

 private:
  Dots* find_mutable(const Bytes& element);
  Dots& entry_for(const Bytes& element);
  void prune(const Bytes& element, const Dots& ctx);

  LogicalClock clock_;
  Entries entries_;
};

/// Deltas carry the same structure as full states: a clock fragment plus the
/// touched entries.
using OrswotDelta = Orswot;

/// Deterministic join of divergent states. A dot survives for an element iff
/// the other side either also has it or never saw it.
Orswot merge(const Orswot& a, const Orswot& b);

/// Clock followed by count-prefixed entries (element, dots), everything
/// big-endian and sorted, so equal states encode to equal bytes.
Bytes encode_orswot(const Orswot& s);
Orswot decode_orswot(const Bytes& raw);

/// Decodes just the leading clock; lets a replica decide whether an incoming
/// full state supersedes its own without materializing the elements.
LogicalClock peek_orswot_clock(const Bytes& raw);

}  // namespace bigset
