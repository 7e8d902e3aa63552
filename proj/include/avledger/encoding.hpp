#ifndef AVLEDGER_ENCODING_HPP
#define AVLEDGER_ENCODING_HPP

#include "avledger/types.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

// Canonical binary encoding primitives.
//
//   integers   fixed width, big-endian (signed as two's complement)
//   f64        IEEE-754 bit pattern as big-endian u64
//   bool       u8 0/1
//   bytes/text u32 length || raw bytes (text is UTF-8)
//   list       u32 count || elements
//   optional   u8 presence flag || value
//   enum       u8
//   fixed      raw (hashes, keys, signatures)
namespace avl::enc {

class Writer {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) { be(v, 2); }
    void u32(std::uint32_t v) { be(v, 4); }
    void u64(std::uint64_t v) { be(v, 8); }
    void i64(std::int64_t v) { be(static_cast<std::uint64_t>(v), 8); }
    void f64(double v) { be(std::bit_cast<std::uint64_t>(v), 8); }
    void boolean(bool v) { u8(v ? 1 : 0); }

    template <std::size_t N>
    void fixed(const std::array<std::uint8_t, N>& a) { out_.insert(out_.end(), a.begin(), a.end()); }
    void hash(const Hash256& h) { fixed(h.bytes); }

    void bytes(std::span<const std::uint8_t> b);
    void text(std::string_view s);
    void raw(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }

    template <typename E>
    void enumeration(E e) { u8(static_cast<std::uint8_t>(e)); }

    const Bytes& data() const& { return out_; }
    Bytes take() && { return std::move(out_); }

private:
    void be(std::uint64_t v, int width) {
        for (int i = width - 1; i >= 0; --i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    Bytes out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

    std::uint8_t u8();
    std::uint16_t u16() { return static_cast<std::uint16_t>(be(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(be(4)); }
    std::uint64_t u64() { return be(8); }
    std::int64_t i64() { return static_cast<std::int64_t>(be(8)); }
    double f64() { return std::bit_cast<double>(be(8)); }
    bool boolean();

    template <std::size_t N>
    std::array<std::uint8_t, N> fixed() {
        need(N);
        std::array<std::uint8_t, N> a{};
        std::copy_n(in_.begin() + static_cast<std::ptrdiff_t>(pos_), N, a.begin());
        pos_ += N;
        return a;
    }
    Hash256 hash() { return Hash256{fixed<32>()}; }

    Bytes bytes();
    std::string text();
    std::span<const std::uint8_t> raw(std::size_t n);

    // Reads a u8 and checks it against the enum's largest value.
    template <typename E>
    E enumeration(std::uint8_t max_value) {
        std::uint8_t v = u8();
        if (v > max_value) fail("enum value out of range");
        return static_cast<E>(v);
    }

    std::uint32_t count(std::size_t min_element_size = 1);

    std::size_t position() const { return pos_; }
    std::size_t remaining() const { return in_.size() - pos_; }
    bool at_end() const { return pos_ == in_.size(); }
    void expect_end() const;

    [[noreturn]] void fail(const std::string& what) const;

private:
    void need(std::size_t n) const;
    std::uint64_t be(int width);

    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

}  // namespace avl::enc

#endif
