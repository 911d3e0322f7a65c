#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "scene/crc32.hpp"
#include "scene/error.hpp"

namespace scene {

static_assert(std::endian::native == std::endian::little,
              "serialized formats are little-endian; big-endian hosts unsupported");

// Append-only byte sink for the little-endian binary formats (checkpoints,
// embedding files, optimizer state). finish_crc() appends the CRC32 of
// everything written so far.
class ByteWriter {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        buf_.insert(buf_.end(), b, b + n);
    }
    void magic(const char tag[4]) { bytes(tag, 4); }
    void u32(std::uint32_t v) { bytes(&v, 4); }
    void u64(std::uint64_t v) { bytes(&v, 8); }
    void f32(float v) { bytes(&v, 4); }
    void f64(double v) { bytes(&v, 8); }
    void f64_span(std::span<const double> v) { bytes(v.data(), v.size() * 8); }

    void finish_crc() { u32(crc32(buf_.data(), buf_.size())); }

    const std::vector<unsigned char>& data() const { return buf_; }
    void write_file(const std::string& path) const;

private:
    std::vector<unsigned char> buf_;
};

// Bounds-checked reader over an in-memory buffer. Errors name the expected
// vs actual byte counts so truncation is diagnosable.
class ByteReader {
public:
    explicit ByteReader(std::vector<unsigned char> buf, std::string origin)
        : buf_(std::move(buf)), origin_(std::move(origin)) {}

    static ByteReader from_file(const std::string& path);

    void expect_magic(const char tag[4]);
    std::uint32_t u32() { return get<std::uint32_t>(); }
    std::uint64_t u64() { return get<std::uint64_t>(); }
    float f32() { return get<float>(); }
    double f64() { return get<double>(); }
    void f64_span(std::span<double> out);
    void f32_into_f64(std::span<double> out);

    // Validates the trailing CRC32 against everything before it.
    void check_crc();

    std::size_t remaining() const { return buf_.size() - pos_; }
    bool at_crc_tail() const { return remaining() == 4; }

private:
    template <typename T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, buf_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    void need(std::size_t n) const {
        if (pos_ + n > buf_.size()) {
            throw IntegrityError(origin_ + ": truncated, needed " + std::to_string(n) +
                                 " bytes at offset " + std::to_string(pos_) + " but only " +
                                 std::to_string(buf_.size() - pos_) + " remain of " +
                                 std::to_string(buf_.size()));
        }
    }
    std::vector<unsigned char> buf_;
    std::string origin_;
    std::size_t pos_ = 0;
};

}  // namespace scene
