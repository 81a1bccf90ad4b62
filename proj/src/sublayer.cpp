#include "adaskip/sublayer.hpp"

#include "adaskip/error.hpp"

namespace adaskip {

std::string_view to_string(SublayerKind kind) {
  return kind == SublayerKind::Attention ? "attn" : "ffn";
}

std::string_view to_string(Phase phase) { return phase == Phase::Prefill ? "prefill" : "decode"; }

SublayerKind parse_kind(std::string_view text) {
  if (text == "attn" || text == "attention") return SublayerKind::Attention;
  if (text == "ffn") return SublayerKind::Ffn;
  fail(ErrorKind::Parse, "unknown sublayer kind '" + std::string(text) + "'");
}

Phase parse_phase(std::string_view text) {
  if (text == "prefill") return Phase::Prefill;
  if (text == "decode") return Phase::Decode;
  fail(ErrorKind::Parse, "unknown phase '" + std::string(text) + "'");
}

std::string to_string(const SublayerRef& ref) {
  return std::to_string(ref.layer) + ":" + std::string(to_string(ref.kind));
}

std::vector<SublayerRef> all_sublayers(std::size_t num_layers) {
  std::vector<SublayerRef> out;
  out.reserve(2 * num_layers);
  for (std::size_t i = 0; i < 2 * num_layers; ++i) out.push_back(SublayerRef::from_index(i));
  return out;
}

}  // namespace adaskip
