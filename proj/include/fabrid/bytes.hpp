#ifndef FABRID_BYTES_HPP
#define FABRID_BYTES_HPP

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fabrid {

using Bytes = std::vector<uint8_t>;
using Block16 = std::array<uint8_t, 16>;

inline void put_u16(Bytes& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

inline void put_u32(Bytes& out, uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<uint8_t>(v >> s));
}

inline void put_u64(Bytes& out, uint64_t v) {
    for (int s = 56; s >= 0; s -= 8) out.push_back(static_cast<uint8_t>(v >> s));
}

// Cursor-style big-endian reader; throws on underrun.
class ByteReader {
  public:
    explicit ByteReader(std::span<const uint8_t> data) : data_(data) {}

    uint8_t u8() { return take(1)[0]; }
    uint16_t u16() {
        auto b = take(2);
        return static_cast<uint16_t>(b[0]) << 8 | b[1];
    }
    uint32_t u32() {
        uint32_t v = 0;
        for (auto b : take(4)) v = v << 8 | b;
        return v;
    }
    uint64_t u64() {
        uint64_t v = 0;
        for (auto b : take(8)) v = v << 8 | b;
        return v;
    }
    std::span<const uint8_t> take(size_t n) {
        if (pos_ + n > data_.size()) throw std::out_of_range("byte reader underrun");
        auto out = data_.subspan(pos_, n);
        pos_ += n;
        return out;
    }
    bool done() const { return pos_ == data_.size(); }
    size_t remaining() const { return data_.size() - pos_; }

  private:
    std::span<const uint8_t> data_;
    size_t pos_ = 0;
};

std::string to_hex(std::span<const uint8_t> data);
Bytes from_hex(const std::string& hex);

}  // namespace fabrid

#endif
