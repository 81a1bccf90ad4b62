#pragma once

// Decode-phase extension of an offline plan: the first P decoded tokens
// measure per-FFN IO similarity in the current context, and every FFN whose
// window mean exceeds beta (the lowest offline similarity in the plan) joins
// the skip set for the remaining steps.

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "adaskip/policy.hpp"
#include "adaskip/runtime.hpp"
#include "adaskip/sublayer.hpp"

namespace adaskip::policy {

inline constexpr std::size_t kDefaultOnlineWindow = 20;

class OnlineState {
 public:
  OnlineState(std::size_t window, std::size_t num_layers);

  /// Accumulates decode-phase FFN IO with token_index < window. Attention and
  /// prefill IO are ignored. Throws State once finalized.
  void observe(const SublayerIO& io);

  /// Computes skipped^P = plan.skipped ∪ {FFN j ∉ plan : window mean_j > beta}.
  /// Every FFN outside the plan must have exactly `window` observations,
  /// otherwise PrematureFinalization.
  const SkipSet& finalize(const SkipPlan& plan, double beta);

  std::size_t window() const noexcept { return window_; }
  bool finalized() const noexcept { return finalized_; }
  std::optional<double> beta() const noexcept { return beta_; }
  const SkipSet& extra() const noexcept { return extra_; }
  const SkipSet& skipped_p() const noexcept { return skipped_p_; }
  /// Plan scales plus window mean scales for the added FFNs.
  const ScaleMap& scales_p() const noexcept { return scales_p_; }

  std::size_t count(std::size_t layer) const { return ffn_.at(layer).count; }
  /// Window means for one FFN; nullopt before any observation.
  std::optional<double> mean_similarity(std::size_t layer) const;
  std::optional<double> mean_scale(std::size_t layer) const;

 private:
  struct FfnStats {
    double sum_similarity = 0.0;
    double sum_scale = 0.0;
    std::size_t count = 0;
  };

  std::size_t window_;
  std::vector<FfnStats> ffn_;
  bool finalized_ = false;
  std::optional<double> beta_;
  SkipSet extra_;
  SkipSet skipped_p_;
  ScaleMap scales_p_;
};

enum class OnlineMode {
  Off,
  /// The window decodes with the offline plan active; only executed FFNs are
  /// measured.
  PlannedWindow,
  /// The window runs every FFN. Attention skipped during prefill stays
  /// skipped since it has no prompt KV.
  FullWindow,
};

std::string_view to_string(OnlineMode mode);
OnlineMode parse_online_mode(std::string_view text);

/// Drives one generation session: hands generate() the skip set for each step
/// and feeds the window observations into an OnlineState. The extension is
/// disabled when the plan has no threshold (empty or not similarity-ranked).
class AdaptiveSchedule {
 public:
  AdaptiveSchedule(const SkipPlan& plan, std::size_t num_layers, OnlineMode mode,
                   std::size_t window = kDefaultOnlineWindow);

  model::PlanResolver resolver();
  model::Hook hook();

  bool online_enabled() const noexcept { return enabled_; }
  const OnlineState& state() const noexcept { return state_; }
  /// The skip set handed out for the most recent step.
  const SkipSet& active() const noexcept { return active_.skip; }

 private:
  model::StepPlan plan_for(Phase phase, std::size_t step);

  const SkipPlan& plan_;
  OnlineMode mode_;
  bool enabled_ = false;
  double beta_ = 0.0;
  OnlineState state_;
  model::StepPlan offline_;
  model::StepPlan window_plan_;
  model::StepPlan active_;
};

}  // namespace adaskip::policy
