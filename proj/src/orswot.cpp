#include "bigset/orswot.hpp"

#include <algorithm>

namespace bigset {

namespace {

bool entry_less(const ElementEntry& e, const Bytes& element) { return e.element < element; }

}  // namespace

Dots* Orswot::find_mutable(const Bytes& element) {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), element, entry_less);
  if (it == entries_.end() || it->element != element) return nullptr;
  return &it->dots;
}

const Dots* Orswot::find(const Bytes& element) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), element, entry_less);
  if (it == entries_.end() || it->element != element) return nullptr;
  return &it->dots;
}

Dots& Orswot::entry_for(const Bytes& element) {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), element, entry_less);
  if (it == entries_.end() || it->element != element) {
    it = entries_.insert(it, ElementEntry{element, {}});
  }
  return it->dots;
}

void Orswot::prune(const Bytes& element, const Dots& ctx) {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), element, entry_less);
  if (it == entries_.end() || it->element != element) return;
  Dots kept;
  kept.reserve(it->dots.size());
  std::set_difference(it->dots.begin(), it->dots.end(), ctx.begin(), ctx.end(),
                      std::back_inserter(kept));
  if (kept.empty()) {
    entries_.erase(it);
  } else {
    it->dots = std::move(kept);
  }
}

Dot Orswot::add(const ActorId& actor, const Bytes& element) {
  Dot dot = clock_.increment(actor);
  // Everything currently stored for the element was observed locally, so the
  // new event is its sole surviving dot.
  entry_for(element) = Dots{dot};
  return dot;
}

Dot Orswot::add(const ActorId& actor, const Bytes& element, const Dots& ctx) {
  for (const Dot& d : ctx) clock_.add(d);
  prune(element, ctx);
  Dot dot = clock_.increment(actor);
  insert_dot(entry_for(element), dot);
  return dot;
}

void Orswot::remove(const Bytes& element) {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), element, entry_less);
  if (it != entries_.end() && it->element == element) entries_.erase(it);
}

void Orswot::remove(const Bytes& element, const Dots& ctx) {
  for (const Dot& d : ctx) clock_.add(d);
  prune(element, ctx);
}

Orswot Orswot::add_delta(const ActorId& actor, const Bytes& element) {
  Dots superseded;
  if (const Dots* dots = find(element)) superseded = *dots;
  Dot dot = add(actor, element);
  insert_dot(superseded, dot);
  return Orswot{clock_from_dots(superseded), Entries{{element, Dots{dot}}}};
}

void Orswot::join_delta(const Orswot& delta) { *this = merge(*this, delta); }

void Orswot::apply_delta(const Bytes& element, const Dot& dot, const Dots& ctx) {
  for (const Dot& d : ctx) clock_.add(d);
  prune(element, ctx);
  if (!clock_.seen(dot)) {
    clock_.add(dot);
    insert_dot(entry_for(element), dot);
  }
}

std::vector<Bytes> Orswot::value() const {
  std::vector<Bytes> out;
  out.reserve(entries_.size());
  for (const auto& entry : entries_) out.push_back(entry.element);
  return out;
}

bool Orswot::check_invariants() const {
  for (size_t i = 0; i < entries_.size(); ++i) {
    const auto& entry = entries_[i];
    if (i > 0 && entries_[i - 1].element >= entry.element) return false;
    if (entry.dots.empty()) return false;
    for (size_t j = 0; j < entry.dots.size(); ++j) {
      if (j > 0 && entry.dots[j - 1] >= entry.dots[j]) return false;
      if (!clock_.seen(entry.dots[j])) return false;
    }
  }
  return true;
}

namespace {

/// Per-element merge rule: keep the intersection plus what the other side
/// has provably not observed.
Dots merge_dots(const Dots& mine, const LogicalClock& my_clock, const Dots& theirs,
                const LogicalClock& their_clock) {
  Dots out;
  for (const Dot& d : mine) {
    if (contains_dot(theirs, d) || !their_clock.seen(d)) insert_dot(out, d);
  }
  for (const Dot& d : theirs) {
    if (!contains_dot(mine, d) && !my_clock.seen(d)) insert_dot(out, d);
  }
  return out;
}

}  // namespace

Orswot merge(const Orswot& a, const Orswot& b) {
  Orswot out;
  out.clock_ = join(a.clock_, b.clock_);

  auto ia = a.entries_.begin();
  auto ib = b.entries_.begin();
  static const Dots kNone;
  while (ia != a.entries_.end() || ib != b.entries_.end()) {
    const Bytes* element;
    const Dots* da = &kNone;
    const Dots* db = &kNone;
    if (ib == b.entries_.end() || (ia != a.entries_.end() && ia->element < ib->element)) {
      element = &ia->element;
      da = &ia->dots;
      ++ia;
    } else if (ia == a.entries_.end() || ib->element < ia->element) {
      element = &ib->element;
      db = &ib->dots;
      ++ib;
    } else {
      element = &ia->element;
      da = &ia->dots;
      db = &ib->dots;
      ++ia;
      ++ib;
    }
    Dots surviving = merge_dots(*da, a.clock_, *db, b.clock_);
    if (!surviving.empty()) {
      out.entries_.push_back(ElementEntry{*element, std::move(surviving)});
    }
  }
  return out;
}

Bytes encode_orswot(const Orswot& s) {
  ByteWriter w;
  Bytes clock_bytes = encode_clock(s.clock());
  w.reserve(clock_bytes.size() + 8 + s.entries().size() * 24);
  w.sized(clock_bytes);
  w.u32(static_cast<uint32_t>(s.entries().size()));
  for (const auto& entry : s.entries()) {
    w.sized(entry.element);
    w.u32(static_cast<uint32_t>(entry.dots.size()));
    for (const Dot& d : entry.dots) {
      w.sized(d.actor);
      w.u64(d.event);
    }
  }
  return w.take();
}

Orswot decode_orswot(const Bytes& raw) {
  ByteReader r(raw);
  LogicalClock clock = decode_clock(r.sized());
  Entries entries;
  uint32_t n = r.u32();
  entries.reserve(n);
  for (uint32_t i = 0; i < n; ++i) {
    ElementEntry entry;
    entry.element = r.sized();
    uint32_t n_dots = r.u32();
    entry.dots.reserve(n_dots);
    for (uint32_t j = 0; j < n_dots; ++j) {
      Dot d;
      d.actor = r.sized();
      d.event = r.u64();
      entry.dots.push_back(std::move(d));
    }
    entries.push_back(std::move(entry));
  }
  r.expect_done();
  Orswot s{std::move(clock), std::move(entries)};
  if (!s.check_invariants()) throw std::invalid_argument("decoded orswot is malformed");
  return s;
}

LogicalClock peek_orswot_clock(const Bytes& raw) {
  ByteReader r(raw);
  return decode_clock(r.sized());
}

}  // namespace bigset
