#include "bigset/clock.hpp"

#include <algorithm>
#include <stdexcept>

namespace bigset {

std::string to_hex(const Bytes& b) {
  static const char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(b.size() * 2);
  for (unsigned char c : b) {
    out.push_back(digits[c >> 4]);
    out.push_back(digits[c & 0xf]);
  }
  return out;
}

bool contains_dot(const Dots& dots, const Dot& d) {
  return std::binary_search(dots.begin(), dots.end(), d);
}

void insert_dot(Dots& dots, const Dot& d) {
  auto it = std::lower_bound(dots.begin(), dots.end(), d);
  if (it == dots.end() || *it != d) dots.insert(it, d);
}

LogicalClock LogicalClock::from_parts(Base base, Cloud cloud) {
  LogicalClock c;
  c.base_ = std::move(base);
  c.cloud_ = std::move(cloud);
  if (!c.is_canonical()) {
    throw std::invalid_argument("clock parts are not in canonical form");
  }
  return c;
}

bool LogicalClock::seen(const Dot& d) const {
  if (d.event == 0) return true;  // no event zero exists; vacuously covered
  if (d.event <= base_of(d.actor)) return true;
  auto it = cloud_.find(d.actor);
  return it != cloud_.end() && it->second.count(d.event) > 0;
}

Dot LogicalClock::increment(const ActorId& actor) {
  if (actor.empty()) throw std::invalid_argument("actor id must be nonempty");
  if (cloud_.count(actor) > 0) {
    throw std::logic_error("increment: actor has dot-cloud residue for itself");
  }
  uint64_t& counter = base_[actor];
  if (counter == UINT64_MAX) throw std::logic_error("increment: event counter overflow");
  ++counter;
  return Dot{actor, counter};
}

void LogicalClock::add(const Dot& d) {
  if (d.actor.empty()) throw std::invalid_argument("dot actor must be nonempty");
  if (d.event == 0) throw std::invalid_argument("dot event must be >= 1");
  if (seen(d)) return;
  cloud_[d.actor].insert(d.event);
  compress(d.actor);
}

void LogicalClock::merge(const LogicalClock& other) {
  if (this == &other) return;
  for (const auto& [actor, counter] : other.base_) {
    uint64_t& mine = base_[actor];
    mine = std::max(mine, counter);
  }
  for (const auto& [actor, events] : other.cloud_) {
    cloud_[actor].insert(events.begin(), events.end());
  }
  for (const auto& [actor, counter] : other.base_) {
    (void)counter;
    compress(actor);
  }
  for (const auto& [actor, events] : other.cloud_) {
    (void)events;
    compress(actor);
  }
}

void LogicalClock::subtract(const Dot& d) {
  if (!seen(d)) return;
  uint64_t base = base_of(d.actor);
  if (d.event <= base) {
    // Demote the base below the removed event; the later contiguous events
    // are still seen and move into the cloud.
    auto& events = cloud_[d.actor];
    for (uint64_t e = d.event + 1; e <= base; ++e) events.insert(e);
    if (events.empty()) cloud_.erase(d.actor);
    if (d.event == 1) {
      base_.erase(d.actor);
    } else {
      base_[d.actor] = d.event - 1;
    }
  } else {
    auto it = cloud_.find(d.actor);
    it->second.erase(d.event);
    if (it->second.empty()) cloud_.erase(it);
  }
}

bool LogicalClock::dominates(const LogicalClock& other) const {
  // Canonical form means the contiguous prefix of a clock is exactly its
  // base, so base coverage plus cloud membership decides domination.
  for (const auto& [actor, counter] : other.base_) {
    if (counter > base_of(actor)) return false;
  }
  for (const auto& [actor, events] : other.cloud_) {
    for (uint64_t e : events) {
      if (!seen(Dot{actor, e})) return false;
    }
  }
  return true;
}

uint64_t LogicalClock::base_of(const ActorId& actor) const {
  auto it = base_.find(actor);
  return it == base_.end() ? 0 : it->second;
}

uint64_t LogicalClock::max_event(const ActorId& actor) const {
  uint64_t best = base_of(actor);
  auto it = cloud_.find(actor);
  if (it != cloud_.end() && !it->second.empty()) {
    best = std::max(best, *it->second.rbegin());
  }
  return best;
}

bool LogicalClock::is_canonical() const {
  for (const auto& [actor, counter] : base_) {
    if (actor.empty() || counter == 0) return false;
  }
  for (const auto& [actor, events] : cloud_) {
    if (actor.empty() || events.empty()) return false;
    uint64_t base = base_of(actor);
    for (uint64_t e : events) {
      if (e <= base) return false;
    }
    if (events.count(base + 1) > 0) return false;
  }
  return true;
}

void LogicalClock::compress(const ActorId& actor) {
  auto it = cloud_.find(actor);
  if (it == cloud_.end()) return;
  auto& events = it->second;
  uint64_t& base = base_[actor];
  // Absorb the contiguous run, then drop anything the base now covers.
  while (!events.empty() && *events.begin() <= base + 1) {
    if (*events.begin() == base + 1) ++base;
    events.erase(events.begin());
  }
  if (events.empty()) cloud_.erase(it);
  if (base == 0) base_.erase(actor);
}

LogicalClock join(LogicalClock a, const LogicalClock& b) {
  a.merge(b);
  return a;
}

LogicalClock add_dot(LogicalClock c, const Dot& d) {
  c.add(d);
  return c;
}

LogicalClock subtract_dot(LogicalClock c, const Dot& d) {
  c.subtract(d);
  return c;
}

LogicalClock clock_from_dots(const Dots& dots) {
  LogicalClock c;
  for (const Dot& d : dots) c.add(d);
  return c;
}

Bytes encode_clock(const LogicalClock& c) {
  // Union of actors appearing in the base or the cloud, in map (byte) order.
  std::map<ActorId, std::pair<uint64_t, const std::set<uint64_t>*>> entries;
  for (const auto& [actor, counter] : c.base()) entries[actor] = {counter, nullptr};
  for (const auto& [actor, events] : c.cloud()) entries[actor].second = &events;

  ByteWriter w;
  w.u32(static_cast<uint32_t>(entries.size()));
  for (const auto& [actor, entry] : entries) {
    w.sized(actor);
    w.u64(entry.first);
    if (entry.second == nullptr) {
      w.u32(0);
    } else {
      w.u32(static_cast<uint32_t>(entry.second->size()));
      for (uint64_t e : *entry.second) w.u64(e);
    }
  }
  return w.take();
}

LogicalClock decode_clock(const Bytes& raw) {
  ByteReader r(raw);
  LogicalClock::Base base;
  LogicalClock::Cloud cloud;
  uint32_t n = r.u32();
  for (uint32_t i = 0; i < n; ++i) {
    ActorId actor = r.sized();
    uint64_t counter = r.u64();
    if (counter > 0) base[actor] = counter;
    uint32_t cloud_count = r.u32();
    if (cloud_count > 0) {
      auto& events = cloud[actor];
      for (uint32_t j = 0; j < cloud_count; ++j) events.insert(r.u64());
    }
  }
  r.expect_done();
  return LogicalClock::from_parts(std::move(base), std::move(cloud));
}

}  // namespace bigset
