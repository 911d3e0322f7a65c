#include "scene/serial.hpp"

#include <cstdio>
#include <fstream>

namespace scene {

void ByteWriter::write_file(const std::string& path) const {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw IoError("cannot open for writing: " + path);
    }
    f.write(reinterpret_cast<const char*>(buf_.data()), static_cast<std::streamsize>(buf_.size()));
    if (!f) {
        throw IoError("short write: " + path);
    }
}

ByteReader ByteReader::from_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary | std::ios::ate);
    if (!f) {
        throw IoError("cannot open: " + path);
    }
    const auto size = static_cast<std::size_t>(f.tellg());
    f.seekg(0);
    std::vector<unsigned char> buf(size);
    f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(size));
    if (!f) {
        throw IoError("short read: " + path);
    }
    return ByteReader(std::move(buf), path);
}

void ByteReader::expect_magic(const char tag[4]) {
    need(4);
    if (std::memcmp(buf_.data() + pos_, tag, 4) != 0) {
        throw IntegrityError(origin_ + ": bad magic, expected '" + std::string(tag, 4) + "'");
    }
    pos_ += 4;
}

void ByteReader::f64_span(std::span<double> out) {
    need(out.size() * 8);
    std::memcpy(out.data(), buf_.data() + pos_, out.size() * 8);
    pos_ += out.size() * 8;
}

void ByteReader::f32_into_f64(std::span<double> out) {
    need(out.size() * 4);
    for (std::size_t i = 0; i < out.size(); ++i) {
        float v;
        std::memcpy(&v, buf_.data() + pos_ + i * 4, 4);
        out[i] = static_cast<double>(v);
    }
    pos_ += out.size() * 4;
}

void ByteReader::check_crc() {
    if (buf_.size() < 4 || pos_ > buf_.size() - 4) {
        throw IntegrityError(origin_ + ": too short to contain a CRC32 trailer");
    }
    std::uint32_t stored;
    std::memcpy(&stored, buf_.data() + buf_.size() - 4, 4);
    const std::uint32_t actual = crc32(buf_.data(), buf_.size() - 4);
    if (stored != actual) {
        char msg[96];
        std::snprintf(msg, sizeof(msg), ": CRC mismatch, stored %08X computed %08X", stored,
                      actual);
        throw IntegrityError(origin_ + msg);
    }
}

}  // namespace scene
