#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bigset {

/// Opaque byte strings: set names, elements, actor ids, encoded keys and
/// values. std::string compares bytewise as unsigned char, which is the
/// ordering every codec in this project relies on.
using Bytes = std::string;

std::string to_hex(const Bytes& b);

/// Append-only writer for the fixed-width big-endian framing shared by the
/// clock, key, delta and log-record codecs.
class ByteWriter {
 public:
  void u8(uint8_t v) { out_.push_back(static_cast<char>(v)); }

  void u32(uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) {
      out_.push_back(static_cast<char>((v >> shift) & 0xff));
    }
  }

  void u64(uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) {
      out_.push_back(static_cast<char>((v >> shift) & 0xff));
    }
  }

  void raw(const Bytes& b) { out_.append(b); }

  /// u32 length prefix followed by the raw bytes.
  void sized(const Bytes& b) {
    u32(static_cast<uint32_t>(b.size()));
    raw(b);
  }

  void reserve(size_t n) { out_.reserve(n); }
  Bytes take() { return std::move(out_); }
  const Bytes& buffer() const { return out_; }

 private:
  Bytes out_;
};

/// Bounds-checked reader over an encoded buffer. Truncated or trailing input
/// raises std::invalid_argument rather than yielding garbage.
class ByteReader {
 public:
  explicit ByteReader(const Bytes& buf) : buf_(buf) {}

  uint8_t u8() {
    need(1);
    return static_cast<uint8_t>(buf_[pos_++]);
  }

  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | static_cast<uint8_t>(buf_[pos_++]);
    return v;
  }

  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | static_cast<uint8_t>(buf_[pos_++]);
    return v;
  }

  Bytes raw(size_t n) {
    need(n);
    Bytes out = buf_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  /// Counterpart of ByteWriter::sized.
  Bytes sized() { return raw(u32()); }

  bool done() const { return pos_ == buf_.size(); }
  size_t remaining() const { return buf_.size() - pos_; }

  /// Decoders call this last so trailing junk is rejected.
  void expect_done() const {
    if (!done()) throw std::invalid_argument("trailing bytes after decoded value");
  }

 private:
  void need(size_t n) const {
    if (buf_.size() - pos_ < n) throw std::invalid_argument("truncated encoded value");
  }

  const Bytes& buf_;
  size_t pos_ = 0;
};

}  // namespace bigset
