#pragma once

#include "drnav/core.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

namespace drnav {

inline std::vector<std::uint8_t> read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open for reading: " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Little-endian byte sink.
class ByteWriter {
public:
    void bytes(const void* p, std::size_t n)
    {
        const auto* c = static_cast<const std::uint8_t*>(p);
        buf_.insert(buf_.end(), c, c + n);
    }
    template <typename U>
    void uint(U v)
    {
        for (std::size_t i = 0; i < sizeof(U); ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f32(float v) { uint(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }

    const std::vector<std::uint8_t>& data() const { return buf_; }

    void save(const std::string& path) const
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open for writing: " + path);
        out.write(reinterpret_cast<const char*>(buf_.data()), static_cast<std::streamsize>(buf_.size()));
        if (!out) throw Error("write failed: " + path);
    }

private:
    std::vector<std::uint8_t> buf_;
};

/// Little-endian byte source; throws drnav::Error on underrun.
class ByteReader {
public:
    explicit ByteReader(std::vector<std::uint8_t> data) : buf_(std::move(data)) {}

    static ByteReader load(const std::string& path) { return ByteReader(read_file(path)); }

    std::size_t remaining() const { return buf_.size() - pos_; }

    bool has(std::size_t n) const { return remaining() >= n; }

    void bytes(void* dst, std::size_t n)
    {
        need(n);
        std::memcpy(dst, buf_.data() + pos_, n);
        pos_ += n;
    }
    template <typename U>
    U uint()
    {
        need(sizeof(U));
        U v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(buf_[pos_ + i]) << (8 * i));
        pos_ += sizeof(U);
        return v;
    }
    float f32() { return std::bit_cast<float>(uint<std::uint32_t>()); }
    double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }

private:
    void need(std::size_t n) const
    {
        if (remaining() < n) throw Error("unexpected end of data");
    }

    std::vector<std::uint8_t> buf_;
    std::size_t pos_ = 0;
};

}  // namespace drnav
