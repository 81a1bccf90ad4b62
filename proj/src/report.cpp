#include "adaskip/bench/report.hpp"

#include <cmath>
#include <cstdio>
#include <map>

#include "adaskip/error.hpp"
#include "adaskip/fileio.hpp"

namespace adaskip::bench {

namespace {

double fixed6(double v) { return std::round(v * 1e6) / 1e6; }

std::string format6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

ReportFormat format_for(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? ReportFormat::Csv : ReportFormat::Json;
}

std::string to_csv(const Report& report) {
  std::string out =
      "strategy,target_2m,task_id,ttft_s,decode_s_per_tok,sublayers_per_tok,flop_ratio,"
      "top1_agreement,logit_cosine\n";
  for (const auto& r : report.rows) {
    out += r.strategy + "," + std::to_string(r.target_2m) + "," + r.task_id + "," +
           format6(r.ttft_s) + "," + format6(r.decode_s_per_tok) + "," +
           format6(r.sublayers_per_tok) + "," + format6(r.flop_ratio) + "," +
           format6(r.top1_agreement) + "," + format6(r.logit_cosine) + "\n";
  }
  return out;
}

nlohmann::json to_json(const Report& report) {
  nlohmann::json rows = nlohmann::json::array();
  struct Sum {
    double ttft = 0, decode = 0, subs = 0, flops = 0, top1 = 0, cos = 0;
    std::size_t n = 0;
  };
  std::map<std::pair<std::string, std::size_t>, Sum> sums;
  for (const auto& r : report.rows) {
    rows.push_back({{"strategy", r.strategy},
                    {"target_2m", r.target_2m},
                    {"task_id", r.task_id},
                    {"ttft_s", fixed6(r.ttft_s)},
                    {"decode_s_per_tok", fixed6(r.decode_s_per_tok)},
                    {"sublayers_per_tok", fixed6(r.sublayers_per_tok)},
                    {"flop_ratio", fixed6(r.flop_ratio)},
                    {"top1_agreement", fixed6(r.top1_agreement)},
                    {"logit_cosine", fixed6(r.logit_cosine)},
                    {"output_tokens", r.output_tokens}});
    // Summaries use the rounded row values so a reloaded report reproduces them.
    auto& s = sums[{r.strategy, r.target_2m}];
    s.ttft += fixed6(r.ttft_s);
    s.decode += fixed6(r.decode_s_per_tok);
    s.subs += fixed6(r.sublayers_per_tok);
    s.flops += fixed6(r.flop_ratio);
    s.top1 += fixed6(r.top1_agreement);
    s.cos += fixed6(r.logit_cosine);
    ++s.n;
  }
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : report.cells) {
    cells.push_back({{"strategy", c.strategy},
                     {"target_2m", c.target_2m},
                     {"plan_digest", c.plan_digest},
                     {"skipped", c.skipped}});
  }
  nlohmann::json summaries = nlohmann::json::array();
  for (const auto& [key, s] : sums) {
    const double n = static_cast<double>(s.n);
    summaries.push_back({{"strategy", key.first},
                         {"target_2m", key.second},
                         {"tasks", s.n},
                         {"ttft_s", fixed6(s.ttft / n)},
                         {"decode_s_per_tok", fixed6(s.decode / n)},
                         {"sublayers_per_tok", fixed6(s.subs / n)},
                         {"flop_ratio", fixed6(s.flops / n)},
                         {"top1_agreement", fixed6(s.top1 / n)},
                         {"logit_cosine", fixed6(s.cos / n)}});
  }
  nlohmann::json errors = nlohmann::json::array();
  for (const auto& e : report.errors) {
    errors.push_back({{"strategy", e.strategy}, {"target_2m", e.target_2m}, {"message", e.message}});
  }
  return {{"cells", cells}, {"rows", rows}, {"summaries", summaries}, {"errors", errors}};
}

Report report_from_json(const nlohmann::json& j) {
  Report report;
  try {
    for (const auto& c : j.at("cells")) {
      report.cells.push_back({c.at("strategy").get<std::string>(), c.at("target_2m").get<std::size_t>(),
                              c.at("plan_digest").get<std::string>(), c.at("skipped").get<std::size_t>()});
    }
    for (const auto& r : j.at("rows")) {
      ReportRow row;
      row.strategy = r.at("strategy").get<std::string>();
      row.target_2m = r.at("target_2m").get<std::size_t>();
      row.task_id = r.at("task_id").get<std::string>();
      row.ttft_s = r.at("ttft_s").get<double>();
      row.decode_s_per_tok = r.at("decode_s_per_tok").get<double>();
      row.sublayers_per_tok = r.at("sublayers_per_tok").get<double>();
      row.flop_ratio = r.at("flop_ratio").get<double>();
      row.top1_agreement = r.at("top1_agreement").get<double>();
      row.logit_cosine = r.at("logit_cosine").get<double>();
      row.output_tokens = r.at("output_tokens").get<std::vector<tokenizer::Token>>();
      report.rows.push_back(std::move(row));
    }
    for (const auto& e : j.at("errors")) {
      report.errors.push_back({e.at("strategy").get<std::string>(), e.at("target_2m").get<std::size_t>(),
                               e.at("message").get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, std::string("report: ") + e.what());
  }
  return report;
}

std::string render(const Report& report, ReportFormat format) {
  return format == ReportFormat::Csv ? to_csv(report) : to_json(report).dump(2) + "\n";
}

void emit_report(const Report& report, ReportFormat format, const std::filesystem::path& path) {
  write_file_atomic(path, render(report, format));
}

Report load_report(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return report_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::Parse, path.string() + ": " + e.what());
  }
}

void strip_timing(Report& report) {
  for (auto& r : report.rows) {
    r.ttft_s = 0.0;
    r.decode_s_per_tok = 0.0;
  }
}

}  // namespace adaskip::bench
