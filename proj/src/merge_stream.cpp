#include "bigset/merge_stream.hpp"

#include <algorithm>

namespace bigset {

ReplicaStream stream_from(const Orswot& state, Bytes source_id) {
  auto pos = std::make_shared<size_t>(0);
  auto entries = std::make_shared<Entries>(state.entries());
  return ReplicaStream{
      std::move(source_id), state.clock(),
      [pos, entries]() -> std::optional<ElementEntry> {
        if (*pos >= entries->size()) return std::nullopt;
        return (*entries)[(*pos)++];
      }};
}

ReplicaStream stream_from(std::shared_ptr<ReadCursor> cursor, Bytes source_id) {
  return ReplicaStream{std::move(source_id), cursor->clock(),
                       [cursor]() { return cursor->next(); }};
}

MergeCursor::MergeCursor(std::vector<ReplicaStream> streams, size_t batch_size)
    : streams_(std::move(streams)), batch_size_(batch_size) {
  if (streams_.empty()) throw std::invalid_argument("merge needs at least one stream");
  if (batch_size_ == 0) throw std::invalid_argument("batch size must be positive");
  heads_.resize(streams_.size());
  for (const auto& s : streams_) clock_.merge(s.clock);
  for (size_t i = 0; i < streams_.size(); ++i) refill(i);
}

void MergeCursor::refill(size_t i) {
  Head& head = heads_[i];
  if (head.exhausted || head.entry) return;
  auto entry = streams_[i].next();
  if (!entry) {
    head.exhausted = true;
    return;
  }
  if (head.last_element && *head.last_element >= entry->element) {
    throw StreamProtocolError(streams_[i].source_id);
  }
  head.last_element = entry->element;
  head.entry = std::move(entry);

  size_t buffered = 0;
  for (const Head& h : heads_) {
    if (h.entry) ++buffered;
  }
  peak_buffered_ = std::max(peak_buffered_, buffered);
}

std::optional<ElementEntry> MergeCursor::next() {
  while (true) {
    // Smallest element among the buffered heads. Streams that have moved
    // past an element without emitting it contribute no dots but their full
    // clock, which is what encodes "I saw those inserts and removed them".
    const Bytes* min_element = nullptr;
    for (const Head& head : heads_) {
      if (head.entry && (min_element == nullptr || head.entry->element < *min_element)) {
        min_element = &head.entry->element;
      }
    }
    if (min_element == nullptr) return std::nullopt;

    ElementEntry out{*min_element, {}};
    Dots candidates;
    for (Head& head : heads_) {
      if (head.entry && head.entry->element == out.element) {
        for (const Dot& d : head.entry->dots) insert_dot(candidates, d);
      }
    }
    for (const Dot& d : candidates) {
      bool survives = true;
      for (size_t i = 0; i < streams_.size(); ++i) {
        const Head& head = heads_[i];
        bool reported = head.entry && head.entry->element == out.element &&
                        contains_dot(head.entry->dots, d);
        if (!reported && streams_[i].clock.seen(d)) {
          survives = false;  // that replica observed the insert and dropped it
          break;
        }
      }
      if (survives) out.dots.push_back(d);
    }

    for (size_t i = 0; i < heads_.size(); ++i) {
      if (heads_[i].entry && heads_[i].entry->element == out.element) {
        heads_[i].entry.reset();
        refill(i);
      }
    }

    if (!out.dots.empty()) return out;
  }
}

std::vector<ElementEntry> MergeCursor::next_batch() {
  std::vector<ElementEntry> batch;
  while (batch.size() < batch_size_) {
    auto entry = next();
    if (!entry) break;
    batch.push_back(std::move(*entry));
  }
  return batch;
}

Orswot merge_streams(std::vector<ReplicaStream> streams, size_t batch_size) {
  MergeCursor cursor(std::move(streams), batch_size);
  Entries entries;
  while (true) {
    auto batch = cursor.next_batch();
    if (batch.empty()) break;
    for (auto& entry : batch) entries.push_back(std::move(entry));
  }
  return Orswot{cursor.clock(), std::move(entries)};
}

bool quorum_member(const std::vector<std::pair<LogicalClock, Dots>>& responses) {
  if (responses.empty()) throw std::invalid_argument("quorum_member needs responses");
  Dots candidates;
  for (const auto& [clock, dots] : responses) {
    (void)clock;
    for (const Dot& d : dots) insert_dot(candidates, d);
  }
  for (const Dot& d : candidates) {
    bool survives = true;
    for (const auto& [clock, dots] : responses) {
      if (!contains_dot(dots, d) && clock.seen(d)) {
        survives = false;
        break;
      }
    }
    if (survives) return true;
  }
  return false;
}

}  // namespace bigset
