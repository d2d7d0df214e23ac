#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "bigset/orswot.hpp"
#include "bigset/replica.hpp"

namespace bigset {

/// A replica stream delivered its elements out of order; names the offender.
struct StreamProtocolError : std::runtime_error {
  explicit StreamProtocolError(const Bytes& source)
      : std::runtime_error("replica stream out of order: " + source), source_id(source) {}
  Bytes source_id;
};

/// One replica's contribution to a quorum read: its set-clock (available
/// before any element) and a pull source of (element, surviving dots) in
/// strictly ascending element order. Tombstones are already applied at the
/// replica, so streams carry surviving dots only.
struct ReplicaStream {
  Bytes source_id;
  LogicalClock clock;
  std::function<std::optional<ElementEntry>()> next;
};

ReplicaStream stream_from(const Orswot& state, Bytes source_id);
ReplicaStream stream_from(std::shared_ptr<ReadCursor> cursor, Bytes source_id);

/// Incremental k-way join of replica streams into one converged value,
/// without materializing any replica's full state. For each element, a dot
/// survives iff every replica either reported it or has provably never seen
/// it; an element is emitted iff some dot survives. At most one buffered
/// element per stream is held at any time.
class MergeCursor {
 public:
  MergeCursor(std::vector<ReplicaStream> streams, size_t batch_size = kDefaultReadBatch);

  /// Join of all stream clocks; the merged read's causal context.
  const LogicalClock& clock() const { return clock_; }

  std::optional<ElementEntry> next();
  std::vector<ElementEntry> next_batch();

  /// High-water mark of simultaneously buffered elements.
  size_t peak_buffered() const { return peak_buffered_; }
  size_t batch_size() const { return batch_size_; }

 private:
  void refill(size_t i);

  struct Head {
    std::optional<ElementEntry> entry;
    std::optional<Bytes> last_element;
    bool exhausted = false;
  };

  std::vector<ReplicaStream> streams_;
  std::vector<Head> heads_;
  LogicalClock clock_;
  size_t batch_size_;
  size_t peak_buffered_ = 0;
};

/// Materialized convenience over MergeCursor.
Orswot merge_streams(std::vector<ReplicaStream> streams,
                     size_t batch_size = kDefaultReadBatch);

/// Quorum membership for a single element: applies the same survival rule to
/// the (clock, surviving dots) responses of R replicas.
bool quorum_member(const std::vector<std::pair<LogicalClock, Dots>>& responses);

}  // namespace bigset
