#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace adaskip {

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_hex(std::span<const std::uint8_t> bytes);

}  // namespace adaskip
