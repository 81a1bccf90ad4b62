#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "adaskip/tensor.hpp"

namespace adaskip {

enum class SublayerKind { Attention = 0, Ffn = 1 };
enum class Phase { Prefill, Decode };

std::string_view to_string(SublayerKind kind);
std::string_view to_string(Phase phase);
/// Accepts "attn"/"attention" and "ffn". Throws Parse otherwise.
SublayerKind parse_kind(std::string_view text);
Phase parse_phase(std::string_view text);

/// One attention or FFN block. Ordered by (layer, kind), attention first.
struct SublayerRef {
  std::size_t layer = 0;
  SublayerKind kind = SublayerKind::Attention;

  /// Dense index in [0, 2M): 2 * layer + kind.
  std::size_t index() const noexcept { return 2 * layer + static_cast<std::size_t>(kind); }
  static SublayerRef from_index(std::size_t index) {
    return {index / 2, index % 2 == 0 ? SublayerKind::Attention : SublayerKind::Ffn};
  }

  auto operator<=>(const SublayerRef&) const = default;
};

std::string to_string(const SublayerRef& ref);

using SkipSet = std::set<SublayerRef>;
using ScaleMap = std::map<SublayerRef, double>;

/// All 2M sublayers in canonical order.
std::vector<SublayerRef> all_sublayers(std::size_t num_layers);

/// Residual-stream values entering (input) and leaving (output) one executed
/// sublayer block for one token. token_index is the prompt position during
/// prefill and the 0-based decoded-token ordinal during decode.
struct SublayerIO {
  SublayerRef sublayer;
  Phase phase = Phase::Prefill;
  std::size_t token_index = 0;
  tensor::Vector input;
  tensor::Vector output;
};

}  // namespace adaskip
