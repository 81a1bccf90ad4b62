#pragma once

#include <filesystem>
#include <string_view>
#include <vector>

#include "adaskip/task.hpp"

namespace adaskip::bench {

/// One JSON object per line: {"id", "prompt", "max_new_tokens"?}. Blank lines
/// are skipped; max_new_tokens defaults to 16. Parse errors name the line;
/// duplicate ids raise Validation.
std::vector<Task> parse_tasks(std::string_view jsonl);
std::vector<Task> load_tasks(const std::filesystem::path& path);

}  // namespace adaskip::bench
