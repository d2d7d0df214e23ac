#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "bigset/bytes.hpp"
#include "bigset/keys.hpp"

namespace bigset {

struct StoreError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Logical I/O counters since the store was opened. Bytes are key + value
/// lengths with no framing; they are backend-independent and reproducible.
struct StoreMetrics {
  uint64_t bytes_read = 0;
  uint64_t bytes_written = 0;
  uint64_t keys_read = 0;
  uint64_t keys_written = 0;

  friend StoreMetrics operator-(StoreMetrics a, const StoreMetrics& b) {
    a.bytes_read -= b.bytes_read;
    a.bytes_written -= b.bytes_written;
    a.keys_read -= b.keys_read;
    a.keys_written -= b.keys_written;
    return a;
  }
  friend StoreMetrics operator+(StoreMetrics a, const StoreMetrics& b) {
    a.bytes_read += b.bytes_read;
    a.bytes_written += b.bytes_written;
    a.keys_read += b.keys_read;
    a.keys_written += b.keys_written;
    return a;
  }
  friend bool operator==(const StoreMetrics&, const StoreMetrics&) = default;
};

/// Ordered list of puts and deletes applied atomically. put_if_changed skips
/// the write (and its metrics) when the stored bytes already equal the new
/// value; that is the "atomic-write-if-changed" used for clock updates.
class WriteBatch {
 public:
  struct Op {
    enum class Kind { Put, PutIfChanged, Erase };
    Kind kind;
    Bytes key;
    Bytes value;
  };

  void put(Bytes key, Bytes value) {
    ops_.push_back({Op::Kind::Put, std::move(key), std::move(value)});
  }
  void put_if_changed(Bytes key, Bytes value) {
    ops_.push_back({Op::Kind::PutIfChanged, std::move(key), std::move(value)});
  }
  void erase(Bytes key) { ops_.push_back({Op::Kind::Erase, std::move(key), {}}); }

  bool empty() const { return ops_.empty(); }
  const std::vector<Op>& ops() const { return ops_; }

 private:
  std::vector<Op> ops_;
};

/// Forward iterator over a stable snapshot. Dropping it early is the way to
/// terminate a scan.
class StoreIterator {
 public:
  virtual ~StoreIterator() = default;
  virtual std::optional<std::pair<Bytes, Bytes>> next() = 0;
};

enum class CompactionDecision { Keep, Drop };

/// Decision callback for one full-range compaction pass plus an optional
/// finalization callback invoked once per physically dropped key. The
/// decision must depend only on the presented key/value, not on store state
/// mutated during the pass.
struct CompactionFilter {
  std::function<CompactionDecision(const BigsetKey&, const Bytes& value)> decide;
  std::function<void(const BigsetKey&)> on_drop;
};

struct CompactionReport {
  uint64_t kept = 0;
  std::vector<BigsetKey> dropped;
};

/// Ordered byte-keyed store: atomic batches, snapshot iteration from a seek
/// position, a bigset-aware compaction pass, and logical I/O metrics.
/// Single writer, any number of concurrent snapshot readers.
class Store {
 public:
  virtual ~Store() = default;

  virtual void apply(const WriteBatch& batch) = 0;
  virtual std::optional<Bytes> get(const Bytes& key) = 0;

  /// Snapshot iterator over [from, to); empty `to` means "to the end".
  virtual std::unique_ptr<StoreIterator> iterate(const Bytes& from, const Bytes& to = {}) = 0;

  /// Full-range pass: drops every key the filter rejects, atomically, and
  /// reports the dropped keys so the caller can trim its tombstone. Keys that
  /// do not decode as bigset keys are kept.
  virtual CompactionReport compact(const CompactionFilter& filter) = 0;

  virtual StoreMetrics metrics() const = 0;
};

namespace detail {

struct ResolvedOp {
  bool is_erase = false;
  Bytes key;
  Bytes value;
};

/// Shared backbone: ordered map + mutex + metrics. Backends only decide how
/// resolved mutations are persisted.
class OrderedStore : public Store {
 public:
  void apply(const WriteBatch& batch) override;
  std::optional<Bytes> get(const Bytes& key) override;
  std::unique_ptr<StoreIterator> iterate(const Bytes& from, const Bytes& to = {}) override;
  CompactionReport compact(const CompactionFilter& filter) override;
  StoreMetrics metrics() const override;

 protected:
  /// Called with the if-changed-resolved ops before they are committed to
  /// the in-memory map. Throwing leaves the store untouched.
  virtual void persist(const std::vector<ResolvedOp>& ops) { (void)ops; }

  std::map<Bytes, Bytes> map_;
  mutable std::mutex mutex_;

 private:
  std::atomic<uint64_t> bytes_read_{0};
  std::atomic<uint64_t> bytes_written_{0};
  std::atomic<uint64_t> keys_read_{0};
  std::atomic<uint64_t> keys_written_{0};
};

}  // namespace detail

/// Default backend used by the simulator, the benchmarks and most tests.
class MemStore final : public detail::OrderedStore {};

/// Durable backend: append-only log of length-framed, checksummed batch
/// records plus the in-memory index. On open the log is replayed; a corrupt
/// or torn tail is truncated away.
class LogStore final : public detail::OrderedStore {
 public:
  explicit LogStore(std::filesystem::path path);

  const std::filesystem::path& path() const { return path_; }
  uint64_t recovered_batches() const { return recovered_batches_; }
  bool truncated_on_open() const { return truncated_on_open_; }

 protected:
  void persist(const std::vector<detail::ResolvedOp>& ops) override;

 private:
  void replay();

  std::filesystem::path path_;
  std::ofstream out_;
  uint64_t recovered_batches_ = 0;
  bool truncated_on_open_ = false;
};

}  // namespace bigset
