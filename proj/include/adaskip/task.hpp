#pragma once

#include <cstddef>
#include <string>

namespace adaskip {

struct Task {
  std::string id;
  std::string prompt;  // UTF-8, byte-tokenized with a leading BOS
  std::size_t max_new_tokens = 16;

  bool operator==(const Task&) const = default;
};

}  // namespace adaskip
