#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace adaskip::tokenizer {

// Byte-level vocabulary: ids 0..255 are raw bytes.
inline constexpr std::uint32_t kBos = 256;
inline constexpr std::uint32_t kEos = 257;
inline constexpr std::size_t kVocabSize = 258;

using Token = std::uint32_t;

/// BOS followed by the UTF-8 bytes of text.
std::vector<Token> encode(std::string_view text);

}  // namespace adaskip::tokenizer
