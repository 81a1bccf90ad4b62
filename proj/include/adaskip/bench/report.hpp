#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "adaskip/tokenizer.hpp"

namespace adaskip::bench {

/// One (strategy, target, task) measurement.
struct ReportRow {
  std::string strategy;
  std::size_t target_2m = 0;
  std::string task_id;
  double ttft_s = 0.0;
  double decode_s_per_tok = 0.0;
  double sublayers_per_tok = 0.0;
  double flop_ratio = 1.0;
  double top1_agreement = 1.0;
  double logit_cosine = 1.0;
  std::vector<tokenizer::Token> output_tokens;

  bool operator==(const ReportRow&) const = default;
};

struct CellInfo {
  std::string strategy;
  std::size_t target_2m = 0;
  std::string plan_digest;
  std::size_t skipped = 0;

  bool operator==(const CellInfo&) const = default;
};

struct CellError {
  std::string strategy;
  std::size_t target_2m = 0;
  std::string message;

  bool operator==(const CellError&) const = default;
};

struct Report {
  std::vector<CellInfo> cells;
  std::vector<ReportRow> rows;
  std::vector<CellError> errors;

  bool operator==(const Report&) const = default;
};

enum class ReportFormat { Csv, Json };

/// From the extension: ".csv" is CSV, anything else JSON.
ReportFormat format_for(const std::filesystem::path& path);

/// Header: strategy,target_2m,task_id,ttft_s,decode_s_per_tok,
/// sublayers_per_tok,flop_ratio,top1_agreement,logit_cosine. Every float is
/// printed with 6 decimals.
std::string to_csv(const Report& report);

/// Floats rounded to 6 decimals. Adds per-cell means under "summaries".
nlohmann::json to_json(const Report& report);
Report report_from_json(const nlohmann::json& j);

std::string render(const Report& report, ReportFormat format);
void emit_report(const Report& report, ReportFormat format, const std::filesystem::path& path);
Report load_report(const std::filesystem::path& path);

/// Clears every wall-clock field so reports compare byte-for-byte.
void strip_timing(Report& report);

}  // namespace adaskip::bench
