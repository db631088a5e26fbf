#pragma once

// Little-endian primitive packing. All protocol integers and floats are
// little-endian regardless of host order.

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace hl2ss {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

class ByteWriter {
public:
    ByteWriter() = default;
    explicit ByteWriter(std::size_t reserve) { buf_.reserve(reserve); }

    ByteWriter& u8(std::uint8_t v) {
        buf_.push_back(v);
        return *this;
    }
    ByteWriter& u16(std::uint16_t v) { return put_le(v); }
    ByteWriter& u32(std::uint32_t v) { return put_le(v); }
    ByteWriter& u64(std::uint64_t v) { return put_le(v); }
    ByteWriter& f32(float v) { return put_le(std::bit_cast<std::uint32_t>(v)); }

    template <std::size_t N>
    ByteWriter& f32(const std::array<float, N>& v) {
        for (float x : v) f32(x);
        return *this;
    }

    ByteWriter& bytes(ByteView v) {
        buf_.insert(buf_.end(), v.begin(), v.end());
        return *this;
    }
    ByteWriter& text(std::string_view s) {
        buf_.insert(buf_.end(), s.begin(), s.end());
        return *this;
    }
    ByteWriter& zeros(std::size_t n) {
        buf_.insert(buf_.end(), n, 0);
        return *this;
    }

    std::size_t size() const noexcept { return buf_.size(); }
    const Bytes& view() const noexcept { return buf_; }
    Bytes take() && { return std::move(buf_); }

private:
    template <typename T>
    ByteWriter& put_le(T v) {
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
        }
        return *this;
    }

    Bytes buf_;
};

/// Bounds-checked sequential reader. Running past the end throws
/// TruncatedError.
class ByteReader {
public:
    explicit ByteReader(ByteView data) : data_(data) {}

    std::uint8_t u8();
    std::uint16_t u16() { return get_le<std::uint16_t>(); }
    std::uint32_t u32() { return get_le<std::uint32_t>(); }
    std::uint64_t u64() { return get_le<std::uint64_t>(); }
    float f32() { return std::bit_cast<float>(get_le<std::uint32_t>()); }

    template <std::size_t N>
    std::array<float, N> f32_array() {
        std::array<float, N> out{};
        for (auto& x : out) x = f32();
        return out;
    }

    ByteView bytes(std::size_t n);
    void skip(std::size_t n) { (void)bytes(n); }

    std::size_t position() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return data_.size() - pos_; }
    bool empty() const noexcept { return remaining() == 0; }

private:
    void require(std::size_t n) const;

    template <typename T>
    T get_le() {
        require(sizeof(T));
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            v |= static_cast<T>(static_cast<T>(data_[pos_ + i]) << (8 * i));
        }
        pos_ += sizeof(T);
        return v;
    }

    ByteView data_;
    std::size_t pos_ = 0;
};

// Direct little-endian loads/stores on raw buffers, used by the hot paths
// (frame header parsing, image packing).
inline std::uint16_t load_u16(const std::uint8_t* p) noexcept {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline std::uint32_t load_u32(const std::uint8_t* p) noexcept {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline std::uint64_t load_u64(const std::uint8_t* p) noexcept {
    return static_cast<std::uint64_t>(load_u32(p)) |
           (static_cast<std::uint64_t>(load_u32(p + 4)) << 32);
}
inline float load_f32(const std::uint8_t* p) noexcept {
    return std::bit_cast<float>(load_u32(p));
}
inline void store_u32(std::uint8_t* p, std::uint32_t v) noexcept {
    for (int i = 0; i < 4; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}
inline void store_f32(std::uint8_t* p, float v) noexcept {
    store_u32(p, std::bit_cast<std::uint32_t>(v));
}

}  // namespace hl2ss
