#include "adaskip/bench/tasks.hpp"

#include <set>
#include <sstream>

#include <json.hpp>

#include "adaskip/error.hpp"
#include "adaskip/fileio.hpp"

namespace adaskip::bench {

std::vector<Task> parse_tasks(std::string_view jsonl) {
  std::vector<Task> tasks;
  std::set<std::string> seen;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(line_no);
    Task t;
    try {
      const auto j = nlohmann::json::parse(line);
      if (!j.is_object()) fail(ErrorKind::Parse, where + ": expected a JSON object");
      if (!j.contains("id")) fail(ErrorKind::Parse, where + ": missing \"id\"");
      if (!j.contains("prompt")) fail(ErrorKind::Parse, where + ": missing \"prompt\"");
      t.id = j.at("id").get<std::string>();
      t.prompt = j.at("prompt").get<std::string>();
      if (j.contains("max_new_tokens")) {
        const auto& n = j.at("max_new_tokens");
        if (!n.is_number_unsigned()) {
          fail(ErrorKind::Parse, where + ": max_new_tokens must be a non-negative integer");
        }
        t.max_new_tokens = n.get<std::size_t>();
      }
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::Parse, where + ": " + e.what());
    }
    if (!seen.insert(t.id).second) fail(ErrorKind::Validation, where + ": duplicate task id '" + t.id + "'");
    tasks.push_back(std::move(t));
  }
  return tasks;
}

std::vector<Task> load_tasks(const std::filesystem::path& path) {
  try {
    return parse_tasks(read_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io) throw;
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

}  // namespace adaskip::bench
