#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace tplas {

std::uint32_t crc32_of(std::string_view bytes);
std::uint32_t crc32_of(std::span<const double> values);

/// Eight lowercase hex digits.
std::string hex32(std::uint32_t value);

}  // namespace tplas
