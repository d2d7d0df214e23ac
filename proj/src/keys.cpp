#include "bigset/keys.hpp"

#include <stdexcept>

namespace bigset {

namespace {

constexpr char kZero = '\x00';
constexpr char kEscape = '\xff';      // 00 ff = literal 0x00 inside a field
constexpr char kTerminator = '\x01';  // 00 01 = end of field

void append_field(Bytes& out, const Bytes& field) {
  for (char c : field) {
    if (c == kZero) {
      out.push_back(kZero);
      out.push_back(kEscape);
    } else {
      out.push_back(c);
    }
  }
  out.push_back(kZero);
  out.push_back(kTerminator);
}

/// Reads one escaped field; leaves the cursor after the terminator.
Bytes read_field(const Bytes& raw, size_t& pos) {
  Bytes field;
  while (true) {
    if (pos >= raw.size()) throw std::invalid_argument("key field missing terminator");
    char c = raw[pos++];
    if (c != kZero) {
      field.push_back(c);
      continue;
    }
    if (pos >= raw.size()) throw std::invalid_argument("key field truncated after 0x00");
    char next = raw[pos++];
    if (next == kEscape) {
      field.push_back(kZero);
    } else if (next == kTerminator) {
      return field;
    } else {
      throw std::invalid_argument("invalid escape sequence in key field");
    }
  }
}

uint64_t read_event(const Bytes& raw, size_t& pos) {
  if (raw.size() - pos < 8) throw std::invalid_argument("key event truncated");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | static_cast<uint8_t>(raw[pos++]);
  return v;
}

}  // namespace

BigsetKey BigsetKey::clock_key(Bytes set) {
  return BigsetKey{std::move(set), KeyKind::Clock, {}, {}};
}

BigsetKey BigsetKey::tombstone_key(Bytes set) {
  return BigsetKey{std::move(set), KeyKind::Tombstone, {}, {}};
}

BigsetKey BigsetKey::element_key(Bytes set, Bytes element, Dot dot) {
  return BigsetKey{std::move(set), KeyKind::Element, std::move(element), std::move(dot)};
}

Bytes encode_key(const BigsetKey& k) {
  bool is_element = k.kind == KeyKind::Element;
  if (k.kind != KeyKind::Clock && k.kind != KeyKind::Tombstone && !is_element) {
    throw std::invalid_argument("encode_key: unknown key kind");
  }
  if (!is_element && (!k.element.empty() || !k.dot.actor.empty() || k.dot.event != 0)) {
    throw std::invalid_argument("encode_key: clock/tombstone keys carry no element or dot");
  }
  if (is_element && (k.dot.actor.empty() || k.dot.event == 0)) {
    throw std::invalid_argument("encode_key: element key needs a valid dot");
  }

  Bytes out;
  out.reserve(k.set.size() + k.element.size() + k.dot.actor.size() + 16);
  append_field(out, k.set);
  out.push_back(static_cast<char>(k.kind));
  if (is_element) {
    append_field(out, k.element);
    append_field(out, k.dot.actor);
    for (int shift = 56; shift >= 0; shift -= 8) {
      out.push_back(static_cast<char>((k.dot.event >> shift) & 0xff));
    }
  }
  return out;
}

BigsetKey decode_key(const Bytes& raw) {
  size_t pos = 0;
  BigsetKey k;
  k.set = read_field(raw, pos);
  if (pos >= raw.size()) throw std::invalid_argument("key missing kind byte");
  uint8_t kind = static_cast<uint8_t>(raw[pos++]);
  switch (kind) {
    case 1: k.kind = KeyKind::Clock; break;
    case 2: k.kind = KeyKind::Tombstone; break;
    case 3: k.kind = KeyKind::Element; break;
    default: throw std::invalid_argument("unknown key kind byte");
  }
  if (k.kind == KeyKind::Element) {
    k.element = read_field(raw, pos);
    k.dot.actor = read_field(raw, pos);
    k.dot.event = read_event(raw, pos);
    if (k.dot.actor.empty() || k.dot.event == 0) {
      throw std::invalid_argument("element key has invalid dot");
    }
  }
  if (pos != raw.size()) throw std::invalid_argument("trailing bytes after key");
  return k;
}

Bytes set_prefix(const Bytes& set) {
  Bytes out;
  append_field(out, set);
  return out;
}

Bytes set_end(const Bytes& set) {
  // The byte after the field terminator is the kind (1..3); 0x04 bounds them.
  Bytes out = set_prefix(set);
  out.push_back('\x04');
  return out;
}

Bytes element_space_prefix(const Bytes& set) {
  Bytes out = set_prefix(set);
  out.push_back(static_cast<char>(KeyKind::Element));
  return out;
}

Bytes element_prefix(const Bytes& set, const Bytes& element) {
  Bytes out = element_space_prefix(set);
  append_field(out, element);
  return out;
}

Bytes element_end(const Bytes& set, const Bytes& element) {
  // Bump the terminator: encoded continuations after a field are either
  // 00 ff (escape) or a nonzero byte, so {.. 00 02} sits right past every
  // key of this element and before the next element's keys.
  Bytes out = element_prefix(set, element);
  out.back() = '\x02';
  return out;
}

}  // namespace bigset
