#include "bigset/store.hpp"

#include <zlib.h>

#include <cstdio>

namespace bigset {
namespace detail {

namespace {

class SnapshotIterator final : public StoreIterator {
 public:
  SnapshotIterator(std::vector<std::pair<Bytes, Bytes>> rows,
                   std::atomic<uint64_t>* keys_read, std::atomic<uint64_t>* bytes_read)
      : rows_(std::move(rows)), keys_read_(keys_read), bytes_read_(bytes_read) {}

  std::optional<std::pair<Bytes, Bytes>> next() override {
    if (pos_ >= rows_.size()) return std::nullopt;
    auto& row = rows_[pos_++];
    keys_read_->fetch_add(1, std::memory_order_relaxed);
    bytes_read_->fetch_add(row.first.size() + row.second.size(), std::memory_order_relaxed);
    return std::move(row);
  }

 private:
  std::vector<std::pair<Bytes, Bytes>> rows_;
  size_t pos_ = 0;
  std::atomic<uint64_t>* keys_read_;
  std::atomic<uint64_t>* bytes_read_;
};

}  // namespace

void OrderedStore::apply(const WriteBatch& batch) {
  std::lock_guard lock(mutex_);
  std::vector<ResolvedOp> resolved;
  resolved.reserve(batch.ops().size());
  // Ops resolve against the batch's own earlier effects, so a batch behaves
  // exactly like sequential application of its ops.
  std::map<Bytes, std::optional<Bytes>> staged;
  auto effective = [&](const Bytes& key) -> std::optional<Bytes> {
    auto overlay = staged.find(key);
    if (overlay != staged.end()) return overlay->second;
    auto it = map_.find(key);
    if (it == map_.end()) return std::nullopt;
    return it->second;
  };
  for (const auto& op : batch.ops()) {
    switch (op.kind) {
      case WriteBatch::Op::Kind::Put:
        resolved.push_back({false, op.key, op.value});
        staged[op.key] = op.value;
        break;
      case WriteBatch::Op::Kind::PutIfChanged: {
        auto current = effective(op.key);
        if (!current || *current != op.value) {
          resolved.push_back({false, op.key, op.value});
          staged[op.key] = op.value;
        }
        break;
      }
      case WriteBatch::Op::Kind::Erase:
        if (effective(op.key)) {
          resolved.push_back({true, op.key, {}});
          staged[op.key] = std::nullopt;
        }
        break;
    }
  }
  if (resolved.empty()) return;

  persist(resolved);  // throws StoreError before any in-memory change

  for (auto& op : resolved) {
    keys_written_.fetch_add(1, std::memory_order_relaxed);
    if (op.is_erase) {
      bytes_written_.fetch_add(op.key.size(), std::memory_order_relaxed);
      map_.erase(op.key);
    } else {
      bytes_written_.fetch_add(op.key.size() + op.value.size(), std::memory_order_relaxed);
      map_[std::move(op.key)] = std::move(op.value);
    }
  }
}

std::optional<Bytes> OrderedStore::get(const Bytes& key) {
  std::lock_guard lock(mutex_);
  auto it = map_.find(key);
  if (it == map_.end()) return std::nullopt;
  keys_read_.fetch_add(1, std::memory_order_relaxed);
  bytes_read_.fetch_add(key.size() + it->second.size(), std::memory_order_relaxed);
  return it->second;
}

std::unique_ptr<StoreIterator> OrderedStore::iterate(const Bytes& from, const Bytes& to) {
  std::lock_guard lock(mutex_);
  auto begin = map_.lower_bound(from);
  auto end = to.empty() ? map_.end() : map_.lower_bound(to);
  // Copy-on-iterate snapshot. Bounded scans keep the copy proportional to
  // the range actually addressed.
  std::vector<std::pair<Bytes, Bytes>> rows(begin, end);
  return std::make_unique<SnapshotIterator>(std::move(rows), &keys_read_, &bytes_read_);
}

CompactionReport OrderedStore::compact(const CompactionFilter& filter) {
  std::lock_guard lock(mutex_);
  CompactionReport report;
  std::vector<ResolvedOp> deletes;
  for (const auto& [raw, value] : map_) {
    keys_read_.fetch_add(1, std::memory_order_relaxed);
    bytes_read_.fetch_add(raw.size() + value.size(), std::memory_order_relaxed);
    BigsetKey key;
    try {
      key = decode_key(raw);
    } catch (const std::invalid_argument&) {
      ++report.kept;  // foreign key, not ours to judge
      continue;
    }
    if (filter.decide && filter.decide(key, value) == CompactionDecision::Drop) {
      deletes.push_back({true, raw, {}});
      report.dropped.push_back(std::move(key));
    } else {
      ++report.kept;
    }
  }

  persist(deletes);

  for (const auto& op : deletes) {
    keys_written_.fetch_add(1, std::memory_order_relaxed);
    bytes_written_.fetch_add(op.key.size(), std::memory_order_relaxed);
    map_.erase(op.key);
  }
  if (filter.on_drop) {
    for (const auto& key : report.dropped) filter.on_drop(key);
  }
  return report;
}

StoreMetrics OrderedStore::metrics() const {
  StoreMetrics m;
  m.bytes_read = bytes_read_.load(std::memory_order_relaxed);
  m.bytes_written = bytes_written_.load(std::memory_order_relaxed);
  m.keys_read = keys_read_.load(std::memory_order_relaxed);
  m.keys_written = keys_written_.load(std::memory_order_relaxed);
  return m;
}

}  // namespace detail

namespace {

Bytes encode_record_payload(const std::vector<detail::ResolvedOp>& ops);

uint32_t payload_crc(const Bytes& payload) {
  return static_cast<uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(payload.data()),
              static_cast<uInt>(payload.size())));
}

}  // namespace

LogStore::LogStore(std::filesystem::path path) : path_(std::move(path)) {
  replay();
  out_.open(path_, std::ios::binary | std::ios::app);
  if (!out_) throw StoreError("cannot open log file for append: " + path_.string());
}

void LogStore::replay() {
  std::ifstream in(path_, std::ios::binary);
  uint64_t valid_end = 0;
  if (in) {
    while (true) {
      char header[8];
      in.read(header, sizeof header);
      if (in.gcount() != sizeof header) break;
      uint32_t len = 0, crc = 0;
      for (int i = 0; i < 4; ++i) len = (len << 8) | static_cast<uint8_t>(header[i]);
      for (int i = 4; i < 8; ++i) crc = (crc << 8) | static_cast<uint8_t>(header[i]);
      Bytes payload(len, '\0');
      in.read(payload.data(), len);
      if (in.gcount() != static_cast<std::streamsize>(len)) break;
      if (payload_crc(payload) != crc) break;

      ByteReader r(payload);
      uint32_t n_ops = r.u32();
      std::vector<std::pair<bool, std::pair<Bytes, Bytes>>> ops;
      ops.reserve(n_ops);
      bool ok = true;
      try {
        for (uint32_t i = 0; i < n_ops; ++i) {
          uint8_t kind = r.u8();
          Bytes key = r.sized();
          if (kind == 1) {
            ops.emplace_back(false, std::make_pair(std::move(key), r.sized()));
          } else if (kind == 2) {
            ops.emplace_back(true, std::make_pair(std::move(key), Bytes{}));
          } else {
            ok = false;
            break;
          }
        }
        if (ok) r.expect_done();
      } catch (const std::invalid_argument&) {
        ok = false;
      }
      if (!ok) break;

      for (auto& [is_erase, kv] : ops) {
        if (is_erase) {
          map_.erase(kv.first);
        } else {
          map_[std::move(kv.first)] = std::move(kv.second);
        }
      }
      ++recovered_batches_;
      valid_end += sizeof header + len;
    }
    in.close();
  }

  std::error_code ec;
  uint64_t actual = std::filesystem::exists(path_, ec)
                        ? std::filesystem::file_size(path_, ec)
                        : 0;
  if (!ec && actual > valid_end) {
    std::filesystem::resize_file(path_, valid_end, ec);
    if (ec) throw StoreError("cannot truncate corrupt log tail: " + path_.string());
    truncated_on_open_ = true;
  }
}

void LogStore::persist(const std::vector<detail::ResolvedOp>& ops) {
  if (ops.empty()) return;
  Bytes payload = encode_record_payload(ops);
  ByteWriter frame;
  frame.u32(static_cast<uint32_t>(payload.size()));
  frame.u32(payload_crc(payload));
  frame.raw(payload);
  Bytes record = frame.take();
  out_.write(record.data(), static_cast<std::streamsize>(record.size()));
  out_.flush();
  if (!out_) throw StoreError("log append failed: " + path_.string());
}

namespace {

Bytes encode_record_payload(const std::vector<detail::ResolvedOp>& ops) {
  ByteWriter w;
  w.u32(static_cast<uint32_t>(ops.size()));
  for (const auto& op : ops) {
    w.u8(op.is_erase ? 2 : 1);
    w.sized(op.key);
    if (!op.is_erase) w.sized(op.value);
  }
  return w.take();
}

}  // namespace

}  // namespace bigset
