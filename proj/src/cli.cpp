#include "adaskip/bench/cli.hpp"

#include <algorithm>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "adaskip/bench/compare.hpp"
#include "adaskip/bench/metrics.hpp"
#include "adaskip/bench/report.hpp"
#include "adaskip/bench/tasks.hpp"
#include "adaskip/error.hpp"
#include "adaskip/model_config.hpp"
#include "adaskip/online.hpp"
#include "adaskip/policy.hpp"
#include "adaskip/profiler.hpp"
#include "adaskip/weights.hpp"

namespace adaskip::bench {

namespace {

namespace fs = std::filesystem;

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& s : split(text, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(s, &used);
      if (used != s.size() || v < 0) throw std::invalid_argument(s);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      fail(ErrorKind::Validation, "expected a non-negative integer, got '" + s + "'");
    }
  }
  if (out.empty()) fail(ErrorKind::Validation, "empty integer list");
  return out;
}

std::optional<SublayerKind> parse_kind_filter(const std::string& text) {
  if (text == "both") return std::nullopt;
  return parse_kind(text);
}

std::vector<policy::Strategy> parse_strategies(const std::string& text) {
  using policy::Strategy;
  if (text == "all") {
    return {Strategy::Full, Strategy::AdaSkip, Strategy::EarlySkip, Strategy::Periodic,
            Strategy::EarlyExit};
  }
  std::vector<Strategy> out;
  for (const auto& s : split(text, ',')) out.push_back(policy::parse_strategy(s));
  return out;
}

// "layer:kind" or "layer:kind:gain".
std::vector<std::pair<SublayerRef, double>> parse_plants(const std::string& text) {
  std::vector<std::pair<SublayerRef, double>> out;
  for (const auto& item : split(text, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() < 2 || parts.size() > 3) {
      fail(ErrorKind::Validation, "plant entry '" + item + "' is not layer:kind[:gain]");
    }
    try {
      SublayerRef ref{static_cast<std::size_t>(std::stoul(parts[0])), parse_kind(parts[1])};
      const double gain = parts.size() == 3 ? std::stod(parts[2]) : 0.0;
      out.emplace_back(ref, gain);
    } catch (const std::logic_error&) {
      fail(ErrorKind::Validation, "plant entry '" + item + "' has a malformed number");
    }
  }
  return out;
}

fs::path decode_sibling(const fs::path& out) {
  fs::path p = out;
  p.replace_extension();
  p += ".decode.json";
  return p;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adaptive sublayer skipping for a toy decoder-only transformer"};
  app.require_subcommand(1);

  // gen-model
  std::string config_path, model_path, out_path, tasks_path, plants;
  std::uint64_t seed = 0;
  auto* gen = app.add_subcommand("gen-model", "Generate seeded random weights");
  gen->add_option("--config", config_path, "Model config JSON")->required();
  gen->add_option("--seed", seed, "RNG seed")->required();
  gen->add_option("--plant-identity", plants, "layer:kind[:gain],... sublayers to neutralise");
  gen->add_option("--out", out_path, "Weight file")->required();

  // profile
  std::string phase_text = "prefill";
  std::size_t decode_len = profiler::kDefaultDecodeLen;
  auto* prof = app.add_subcommand("profile", "Profile IO similarity over tasks");
  prof->add_option("--model", model_path)->required();
  prof->add_option("--config", config_path)->required();
  prof->add_option("--tasks", tasks_path)->required();
  prof->add_option("--phase", phase_text)->check(CLI::IsMember({"prefill", "decode", "both"}));
  prof->add_option("--decode-len", decode_len);
  prof->add_option("--out", out_path)->required();

  // plan
  std::string profile_path, strategy_text = "adaskip";
  double alpha = 0.0;
  std::size_t target = 0;
  bool protect_first = false, protect_last = false;
  auto* plan_cmd = app.add_subcommand("plan", "Build a skip plan");
  plan_cmd->add_option("--profile", profile_path)->required();
  auto* alpha_opt = plan_cmd->add_option("--alpha", alpha, "Acceleration ratio (>= 1)");
  auto* target_opt = plan_cmd->add_option("--target-sublayers", target, "Sublayers to skip (2m)");
  alpha_opt->excludes(target_opt);
  plan_cmd->add_option("--strategy", strategy_text)
      ->check(CLI::IsMember({"adaskip", "early", "periodic", "exit"}));
  plan_cmd->add_flag("--protect-first", protect_first, "Never skip layer 0 (adaskip)");
  plan_cmd->add_flag("--protect-last", protect_last, "Never skip the last layer (adaskip)");
  plan_cmd->add_option("--out", out_path)->required();

  // run
  std::string plan_path, online_text = "planned-window";
  std::size_t window = policy::kDefaultOnlineWindow;
  std::size_t repeats = 3;
  bool no_timing = false;
  auto* run_cmd = app.add_subcommand("run", "Run a plan over tasks");
  run_cmd->add_option("--model", model_path)->required();
  run_cmd->add_option("--config", config_path)->required();
  run_cmd->add_option("--plan", plan_path)->required();
  run_cmd->add_option("--tasks", tasks_path)->required();
  run_cmd->add_option("--online-window", window);
  run_cmd->add_option("--online", online_text)
      ->check(CLI::IsMember({"off", "full-window", "planned-window"}));
  run_cmd->add_option("--repeats", repeats, "Timed repetitions (median)");
  run_cmd->add_flag("--no-timing", no_timing, "Zero wall-clock fields");
  run_cmd->add_option("--out", out_path, "Report (.csv or .json)")->required();

  // compare
  std::string targets_text = "8,16", strategies_text = "all";
  auto* cmp = app.add_subcommand("compare", "Compare strategies across targets");
  cmp->add_option("--model", model_path)->required();
  cmp->add_option("--config", config_path)->required();
  cmp->add_option("--profile", profile_path)->required();
  cmp->add_option("--tasks", tasks_path)->required();
  cmp->add_option("--targets", targets_text);
  cmp->add_option("--strategies", strategies_text);
  cmp->add_option("--online-window", window);
  cmp->add_option("--online", online_text)
      ->check(CLI::IsMember({"off", "full-window", "planned-window"}));
  cmp->add_option("--repeats", repeats);
  cmp->add_flag("--no-timing", no_timing);
  cmp->add_option("--out", out_path, "Output directory")->required();

  // hit-rate
  std::string src_path, k_text = "4,6,10", kind_text = "both";
  std::vector<std::string> dest_paths;
  auto* hit = app.add_subcommand("hit-rate", "Hit rate of a source profile's top-k on destination profiles");
  hit->add_option("--src-profile", src_path)->required();
  hit->add_option("--dest-profile", dest_paths, "One or more destination profiles (averaged)")->required();
  hit->add_option("--k", k_text);
  hit->add_option("--kind", kind_text)->check(CLI::IsMember({"attn", "ffn", "both"}));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, er;
    const int code = app.exit(e, o, er);
    out << o.str();
    err << er.str();
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) {
      const auto config = model::load_config(config_path);
      auto weights = model::init_model(config, seed);
      for (const auto& [ref, gain] : parse_plants(plants)) model::plant_identity(weights, ref, gain);
      model::save_weights(out_path, weights);
      out << "wrote " << out_path << " (model_id " << model::model_id(weights) << ")\n";
    } else if (*prof) {
      const auto config = model::load_config(config_path);
      const auto weights = model::load_weights(model_path, config);
      const auto tasks = load_tasks(tasks_path);
      const auto phases = profiler::parse_phase_selector(phase_text);
      const auto set = profiler::profile_tasks(weights, config, tasks, phases, decode_len);
      if (set.prefill) {
        profiler::save_profile(out_path, *set.prefill);
        out << "wrote prefill profile " << out_path << "\n";
      }
      if (set.decode) {
        const fs::path p = phases == profiler::PhaseSelector::Both ? decode_sibling(out_path) : fs::path(out_path);
        profiler::save_profile(p, *set.decode);
        out << "wrote decode profile " << p.string() << "\n";
      }
    } else if (*plan_cmd) {
      const auto profile = profiler::load_profile(profile_path);
      const auto strategy = policy::parse_strategy(strategy_text);
      const bool by_alpha = alpha_opt->count() > 0;
      if (!by_alpha && target_opt->count() == 0) {
        fail(ErrorKind::Validation, "plan needs --alpha or --target-sublayers");
      }
      policy::SkipPlan plan;
      if (strategy == policy::Strategy::AdaSkip) {
        const policy::OfflineOptions opts{protect_first, protect_last};
        plan = by_alpha ? policy::build_offline_plan(profile, alpha, opts)
                        : policy::build_offline_plan_for_target(profile, target, opts);
      } else {
        const std::size_t layers = profile.num_layers();
        if (!by_alpha && target % 2 != 0) {
          fail(ErrorKind::Validation, "layer-wise strategies need an even --target-sublayers");
        }
        const std::size_t m_layers = by_alpha ? policy::skip_count(layers, alpha) : target / 2;
        plan = policy::baseline_plan(strategy, layers, m_layers);
        if (by_alpha) plan.alpha = alpha;
        plan.source_profile_digest = profiler::digest(profile);
      }
      policy::save_plan(out_path, plan);
      out << "wrote " << out_path << ": " << plan.size() << " sublayers skipped, theoretical speedup "
          << policy::theoretical_speedup(profile.num_layers(), plan.m) << "\n";
    } else if (*run_cmd) {
      const auto config = model::load_config(config_path);
      const auto weights = model::load_weights(model_path, config);
      const auto plan = policy::load_plan(plan_path);
      const auto tasks = load_tasks(tasks_path);
      RunOptions opts;
      opts.online = policy::parse_online_mode(online_text);
      opts.online_window = window;
      opts.timing = !no_timing;
      opts.timing_repeats = repeats;
      const auto report = run_plan(weights, config, plan, tasks, opts);
      emit_report(report, format_for(out_path), out_path);
      out << "wrote " << out_path << " (" << report.rows.size() << " rows)\n";
    } else if (*cmp) {
      const auto config = model::load_config(config_path);
      const auto weights = model::load_weights(model_path, config);
      const auto profile = profiler::load_profile(profile_path);
      const auto tasks = load_tasks(tasks_path);
      const auto targets = parse_sizes(targets_text);
      const auto strategies = parse_strategies(strategies_text);
      RunOptions opts;
      opts.online = policy::parse_online_mode(online_text);
      opts.online_window = window;
      opts.timing = !no_timing;
      opts.timing_repeats = repeats;
      const auto report = compare_strategies(weights, config, profile, tasks, targets, strategies, opts);
      std::error_code ec;
      fs::create_directories(out_path, ec);
      if (ec) fail(ErrorKind::Io, "cannot create " + out_path + ": " + ec.message());
      emit_report(report, ReportFormat::Csv, fs::path(out_path) / "compare.csv");
      emit_report(report, ReportFormat::Json, fs::path(out_path) / "compare.json");
      for (const auto& e : report.errors) {
        err << "cell " << e.strategy << "/" << e.target_2m << " failed: " << e.message << "\n";
      }
      out << "wrote " << out_path << "/compare.{csv,json} (" << report.rows.size() << " rows, "
          << report.errors.size() << " failed cells)\n";
      if (!report.errors.empty()) return 3;
    } else if (*hit) {
      const auto src = profiler::load_profile(src_path);
      std::vector<profiler::SimilarityProfile> dests;
      for (const auto& p : dest_paths) dests.push_back(profiler::load_profile(p));
      const auto kind = parse_kind_filter(kind_text);
      for (std::size_t k : parse_sizes(k_text)) {
        const auto predicted = policy::top_k(src, k, kind);
        const SkipSet set(predicted.begin(), predicted.end());
        const double rate = mean_hit_rate(set, dests, k, kind);
        char buf[128];
        std::snprintf(buf, sizeof(buf), "kind=%s k=%zu hits=%.2f/%zu rate=%.6f\n", kind_text.c_str(), k,
                      rate * static_cast<double>(k), k, rate);
        out << buf;
      }
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

}  // namespace adaskip::bench
