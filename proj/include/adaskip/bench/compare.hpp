#pragma once

// Runs skip plans over task sets and scores them against the full model.
//
// Timing protocol: one warm-up run, then the median of `timing_repeats`
// timed runs (TTFT and mean decode seconds per token), single sequence.

#include <cstddef>
#include <span>
#include <vector>

#include "adaskip/bench/metrics.hpp"
#include "adaskip/bench/report.hpp"
#include "adaskip/online.hpp"
#include "adaskip/policy.hpp"
#include "adaskip/profiler.hpp"
#include "adaskip/runtime.hpp"
#include "adaskip/task.hpp"

namespace adaskip::bench {

struct RunOptions {
  policy::OnlineMode online = policy::OnlineMode::PlannedWindow;
  std::size_t online_window = policy::kDefaultOnlineWindow;
  bool timing = true;
  std::size_t timing_repeats = 3;
};

/// Full-model greedy run used as the teacher-forcing reference.
struct Reference {
  std::vector<tokenizer::Token> tokens;
  std::vector<tensor::Vector> logits;
};

Reference reference_run(const model::Weights& weights, const model::ModelConfig& config,
                        const Task& task);

/// Everything measured for one task under one plan.
struct TaskRun {
  model::GenerateResult result;
  /// Active skip set for prefill (index 0) and each decode step after it.
  std::vector<SkipSet> step_sets;
  /// Hook-counted executions: prefill total, then one entry per decode step.
  std::size_t prefill_hook_count = 0;
  std::vector<std::size_t> decode_hook_counts;
  SkipSet online_extra;
  bool online_finalized = false;
  DivergenceReport divergence;
  double flop_ratio = 1.0;
};

/// Runs plan on task teacher-forced on the reference tokens.
TaskRun run_task(const model::Weights& weights, const model::ModelConfig& config,
                 const policy::SkipPlan& plan, const Task& task, const Reference& reference,
                 const RunOptions& options);

/// flop_ratio of a run from its per-step skip sets and the analytic model.
double flop_ratio(const model::ModelConfig& config, std::size_t prompt_len,
                  std::span<const SkipSet> step_sets);

ReportRow make_row(const policy::SkipPlan& plan, const Task& task, const TaskRun& run);

/// One plan over all tasks (the `run` subcommand).
Report run_plan(const model::Weights& weights, const model::ModelConfig& config,
                const policy::SkipPlan& plan, std::span<const Task> tasks,
                const RunOptions& options);

/// Every (strategy, target) cell over all tasks. The full model contributes a
/// single target-0 cell. Failing cells are reported in Report::errors and do
/// not abort the others. Throws Validation if any task id appears in the
/// profile's calibration set.
Report compare_strategies(const model::Weights& weights, const model::ModelConfig& config,
                          const profiler::SimilarityProfile& profile, std::span<const Task> tasks,
                          std::span<const std::size_t> targets,
                          std::span<const policy::Strategy> strategies, const RunOptions& options);

/// Builds the plan for one compare cell.
policy::SkipPlan plan_for_cell(policy::Strategy strategy, std::size_t target_2m,
                               const profiler::SimilarityProfile& profile, std::size_t num_layers);

void require_disjoint(const profiler::SimilarityProfile& profile, std::span<const Task> tasks);

}  // namespace adaskip::bench
