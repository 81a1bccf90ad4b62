#include "adaskip/tokenizer.hpp"

namespace adaskip::tokenizer {

std::vector<Token> encode(std::string_view text) {
  std::vector<Token> out;
  out.reserve(text.size() + 1);
  out.push_back(kBos);
  for (char c : text) out.push_back(static_cast<unsigned char>(c));
  return out;
}

}  // namespace adaskip::tokenizer
