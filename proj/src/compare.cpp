#include "adaskip/bench/compare.hpp"

#include <algorithm>
#include <numeric>

#include "adaskip/error.hpp"
#include "adaskip/parallel.hpp"
#include "adaskip/tokenizer.hpp"

namespace adaskip::bench {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

TaskRun run_once(const model::Weights& weights, const model::ModelConfig& config,
                 const policy::SkipPlan& plan, const std::vector<tokenizer::Token>& prompt,
                 const Reference& reference, const RunOptions& options) {
  policy::AdaptiveSchedule schedule(plan, config.num_layers, options.online, options.online_window);
  TaskRun run;
  std::size_t* counter = &run.prefill_hook_count;

  auto inner_resolver = schedule.resolver();
  model::PlanResolver resolver = [&](Phase phase, std::size_t step) {
    model::StepPlan p = inner_resolver(phase, step);
    run.step_sets.push_back(p.skip);
    if (phase == Phase::Decode) {
      run.decode_hook_counts.push_back(0);
      counter = &run.decode_hook_counts.back();
    }
    return p;
  };
  auto inner_hook = schedule.hook();
  model::Hook hook = [&](const SublayerIO& io) {
    inner_hook(io);
    ++*counter;
  };

  model::GenerateOptions opts;
  opts.max_new_tokens = reference.tokens.size();
  opts.forced = reference.tokens;
  opts.keep_logits = true;
  run.result = model::generate(weights, config, prompt, opts, resolver, hook);
  run.online_extra = schedule.state().extra();
  run.online_finalized = schedule.state().finalized();
  run.divergence = divergence(reference.logits, run.result.logits);
  run.flop_ratio = flop_ratio(config, prompt.size(), run.step_sets);
  return run;
}

}  // namespace

Reference reference_run(const model::Weights& weights, const model::ModelConfig& config,
                        const Task& task) {
  model::GenerateOptions opts;
  opts.max_new_tokens = task.max_new_tokens;
  opts.keep_logits = true;
  auto r = model::generate(weights, config, tokenizer::encode(task.prompt), opts);
  return {std::move(r.tokens), std::move(r.logits)};
}

double flop_ratio(const model::ModelConfig& config, std::size_t prompt_len,
                  std::span<const SkipSet> step_sets) {
  const std::size_t d = config.hidden_dim;
  const double ffn = ffn_token_flops(d, config.ffn_dim);
  double full = 0.0;
  double executed = 0.0;
  for (std::size_t s = 0; s < step_sets.size(); ++s) {
    const bool is_prefill = s == 0;
    const double attn = is_prefill ? attention_prefill_flops(d, prompt_len)
                                   : attention_decode_flops(d, prompt_len + s);
    const double ffn_cost = is_prefill ? ffn * static_cast<double>(prompt_len) : ffn;
    for (std::size_t l = 0; l < config.num_layers; ++l) {
      full += attn + ffn_cost;
      if (!step_sets[s].count({l, SublayerKind::Attention})) executed += attn;
      if (!step_sets[s].count({l, SublayerKind::Ffn})) executed += ffn_cost;
    }
  }
  return full > 0.0 ? executed / full : 1.0;
}

TaskRun run_task(const model::Weights& weights, const model::ModelConfig& config,
                 const policy::SkipPlan& plan, const Task& task, const Reference& reference,
                 const RunOptions& options) {
  const auto prompt = tokenizer::encode(task.prompt);
  if (!options.timing) {
    TaskRun run = run_once(weights, config, plan, prompt, reference, options);
    run.result.ttft_seconds = 0.0;
    std::fill(run.result.decode_seconds.begin(), run.result.decode_seconds.end(), 0.0);
    return run;
  }
  run_once(weights, config, plan, prompt, reference, options);  // warm-up
  std::vector<double> ttft;
  std::vector<double> per_tok;
  TaskRun first;
  for (std::size_t i = 0; i < std::max<std::size_t>(1, options.timing_repeats); ++i) {
    TaskRun run = run_once(weights, config, plan, prompt, reference, options);
    ttft.push_back(run.result.ttft_seconds);
    per_tok.push_back(mean(run.result.decode_seconds));
    if (i == 0) first = std::move(run);
  }
  // The timed runs are identical apart from wall clock; report medians.
  first.result.ttft_seconds = median(ttft);
  const double per_tok_median = median(per_tok);
  std::fill(first.result.decode_seconds.begin(), first.result.decode_seconds.end(), per_tok_median);
  return first;
}

ReportRow make_row(const policy::SkipPlan& plan, const Task& task, const TaskRun& run) {
  ReportRow row;
  row.strategy = std::string(policy::to_string(plan.strategy));
  row.target_2m = plan.size();
  row.task_id = task.id;
  row.ttft_s = run.result.ttft_seconds;
  row.decode_s_per_tok = mean(run.result.decode_seconds);
  if (!run.decode_hook_counts.empty()) {
    double total = 0.0;
    for (auto c : run.decode_hook_counts) total += static_cast<double>(c);
    row.sublayers_per_tok = total / static_cast<double>(run.decode_hook_counts.size());
  } else {
    row.sublayers_per_tok = static_cast<double>(run.prefill_hook_count) /
                            static_cast<double>(run.result.prompt_len);
  }
  row.flop_ratio = run.flop_ratio;
  row.top1_agreement = run.divergence.top1_agreement;
  row.logit_cosine = run.divergence.logit_cosine;
  row.output_tokens = run.result.tokens;
  return row;
}

namespace {

std::vector<Reference> references(const model::Weights& weights, const model::ModelConfig& config,
                                  std::span<const Task> tasks) {
  std::vector<Reference> refs(tasks.size());
  parallel_for(tasks.size(), [&](std::size_t i) {
    try {
      refs[i] = reference_run(weights, config, tasks[i]);
    } catch (const Error& e) {
      throw Error(e.kind(), "task " + tasks[i].id + ": " + e.what());
    }
  });
  return refs;
}

std::vector<ReportRow> run_cell(const model::Weights& weights, const model::ModelConfig& config,
                                const policy::SkipPlan& plan, std::span<const Task> tasks,
                                std::span<const Reference> refs, const RunOptions& options) {
  std::vector<ReportRow> rows(tasks.size());
  parallel_for(tasks.size(), [&](std::size_t i) {
    try {
      rows[i] = make_row(plan, tasks[i], run_task(weights, config, plan, tasks[i], refs[i], options));
    } catch (const Error& e) {
      throw Error(e.kind(), "task " + tasks[i].id + ": " + e.what());
    }
  });
  return rows;
}

}  // namespace

Report run_plan(const model::Weights& weights, const model::ModelConfig& config,
                const policy::SkipPlan& plan, std::span<const Task> tasks,
                const RunOptions& options) {
  const auto refs = references(weights, config, tasks);
  Report report;
  report.cells.push_back({std::string(policy::to_string(plan.strategy)), plan.size(),
                          policy::digest(plan), plan.size()});
  report.rows = run_cell(weights, config, plan, tasks, refs, options);
  return report;
}

void require_disjoint(const profiler::SimilarityProfile& profile, std::span<const Task> tasks) {
  for (const auto& t : tasks) {
    if (std::binary_search(profile.task_ids.begin(), profile.task_ids.end(), t.id)) {
      fail(ErrorKind::Validation, "evaluation task '" + t.id +
                                      "' was used to build the profile; calibration and evaluation sets must be disjoint");
    }
  }
}

policy::SkipPlan plan_for_cell(policy::Strategy strategy, std::size_t target_2m,
                               const profiler::SimilarityProfile& profile, std::size_t num_layers) {
  using policy::Strategy;
  if (strategy == Strategy::AdaSkip) return policy::build_offline_plan_for_target(profile, target_2m);
  if (target_2m % 2 != 0) {
    fail(ErrorKind::Validation, "layer-wise strategies need an even sublayer target, got " +
                                    std::to_string(target_2m));
  }
  policy::SkipPlan plan = policy::baseline_plan(strategy, num_layers, target_2m / 2);
  plan.source_profile_digest = profiler::digest(profile);
  return plan;
}

Report compare_strategies(const model::Weights& weights, const model::ModelConfig& config,
                          const profiler::SimilarityProfile& profile, std::span<const Task> tasks,
                          std::span<const std::size_t> targets,
                          std::span<const policy::Strategy> strategies, const RunOptions& options) {
  using policy::Strategy;
  require_disjoint(profile, tasks);
  if (profile.num_layers() != config.num_layers) {
    fail(ErrorKind::Validation, "profile covers " + std::to_string(profile.num_layers()) +
                                    " layers but the model has " + std::to_string(config.num_layers));
  }
  const auto refs = references(weights, config, tasks);

  std::vector<std::pair<Strategy, std::size_t>> cells;
  if (std::find(strategies.begin(), strategies.end(), Strategy::Full) != strategies.end()) {
    cells.emplace_back(Strategy::Full, 0);
  }
  for (std::size_t target : targets) {
    for (Strategy s : strategies) {
      if (s != Strategy::Full) cells.emplace_back(s, target);
    }
  }

  Report report;
  for (const auto& [strategy, target] : cells) {
    try {
      const auto plan = plan_for_cell(strategy, target, profile, config.num_layers);
      auto rows = run_cell(weights, config, plan, tasks, refs, options);
      report.cells.push_back({std::string(policy::to_string(strategy)), target, policy::digest(plan),
                              plan.size()});
      for (auto& r : rows) {
        r.target_2m = target;
        report.rows.push_back(std::move(r));
      }
    } catch (const std::exception& e) {
      report.errors.push_back({std::string(policy::to_string(strategy)), target, e.what()});
    }
  }
  return report;
}

}  // namespace adaskip::bench
