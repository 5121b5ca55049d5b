#include "tplas/core/checksum.hpp"

#include <zlib.h>

#include <cstdio>

namespace tplas {

std::uint32_t crc32_of(std::string_view bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    return static_cast<std::uint32_t>(
        crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

std::uint32_t crc32_of(std::span<const double> values) {
    return crc32_of(std::string_view(reinterpret_cast<const char*>(values.data()),
                                     values.size_bytes()));
}

std::string hex32(std::uint32_t value) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", value);
    return buf;
}

}  // namespace tplas
