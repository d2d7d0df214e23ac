#pragma once

#include <cstdint>

#include "bigset/bytes.hpp"
#include "bigset/clock.hpp"

namespace bigset {

/// Kind discriminant byte. The numeric values fix the per-set key order:
/// clock first, tombstone second, then every element key.
enum class KeyKind : uint8_t { Clock = 1, Tombstone = 2, Element = 3 };

/// Composite store key. One Clock and one Tombstone key per set; one Element
/// key per surviving insertion, identified by (set, element, dot).
struct BigsetKey {
  Bytes set;
  KeyKind kind = KeyKind::Clock;
  Bytes element;  // Element kind only
  Dot dot;        // Element kind only

  static BigsetKey clock_key(Bytes set);
  static BigsetKey tombstone_key(Bytes set);
  static BigsetKey element_key(Bytes set, Bytes element, Dot dot);

  friend bool operator==(const BigsetKey&, const BigsetKey&) = default;
};

/// Order-preserving encoding. Variable-length fields (set, element, actor)
/// escape 0x00 as {0x00 0xFF} and close with the terminator {0x00 0x01}; the
/// event is a trailing fixed-width big-endian u64. Bytewise comparison of two
/// encoded keys therefore equals comparison of the
/// (set, kind, element, actor, event) tuples.
///
/// Layout:
///   esc(set) 00 01 kind                                  Clock / Tombstone
///   esc(set) 00 01 03 esc(element) 00 01 esc(actor) 00 01 u64(event)
///
/// Clock and Tombstone keys must carry no element/dot; Element keys need a
/// valid dot (nonempty actor, event >= 1).
Bytes encode_key(const BigsetKey& k);
BigsetKey decode_key(const Bytes& raw);

/// Seek helpers. Each *_end bound is exclusive and pairs with the matching
/// prefix to delimit exactly the keys of one set / one element.
Bytes set_prefix(const Bytes& set);
Bytes set_end(const Bytes& set);
Bytes element_space_prefix(const Bytes& set);
Bytes element_prefix(const Bytes& set, const Bytes& element);
Bytes element_end(const Bytes& set, const Bytes& element);

}  // namespace bigset
