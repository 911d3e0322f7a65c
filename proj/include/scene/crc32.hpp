#pragma once

#include <cstddef>
#include <cstdint>

namespace scene {

// IEEE 802.3 CRC-32 (the zlib polynomial), init 0xFFFFFFFF, final xor.
// crc32("123456789") == 0xCBF43926.
std::uint32_t crc32(const void* data, std::size_t len, std::uint32_t seed = 0);

}  // namespace scene
