#include "adaskip/online.hpp"

#include "adaskip/error.hpp"
#include "adaskip/tensor.hpp"

namespace adaskip::policy {

OnlineState::OnlineState(std::size_t window, std::size_t num_layers)
    : window_(window), ffn_(num_layers) {
  if (window == 0) fail(ErrorKind::Validation, "online window must be at least 1 token");
}

void OnlineState::observe(const SublayerIO& io) {
  if (finalized_) fail(ErrorKind::State, "observation after the online window was finalized");
  if (io.phase != Phase::Decode || io.sublayer.kind != SublayerKind::Ffn) return;
  if (io.token_index >= window_) {
    fail(ErrorKind::ContractViolation, "decoded token " + std::to_string(io.token_index) +
                                           " lies outside the online window of " +
                                           std::to_string(window_));
  }
  auto& s = ffn_.at(io.sublayer.layer);
  s.sum_similarity += tensor::cosine_similarity(io.input, io.output);
  s.sum_scale += tensor::l2_norm(io.output) / tensor::l2_norm(io.input);
  ++s.count;
}

std::optional<double> OnlineState::mean_similarity(std::size_t layer) const {
  const auto& s = ffn_.at(layer);
  if (s.count == 0) return std::nullopt;
  return s.sum_similarity / static_cast<double>(s.count);
}

std::optional<double> OnlineState::mean_scale(std::size_t layer) const {
  const auto& s = ffn_.at(layer);
  if (s.count == 0) return std::nullopt;
  return s.sum_scale / static_cast<double>(s.count);
}

const SkipSet& OnlineState::finalize(const SkipPlan& plan, double beta) {
  if (finalized_) fail(ErrorKind::State, "online window already finalized");
  for (std::size_t l = 0; l < ffn_.size(); ++l) {
    const SublayerRef ref{l, SublayerKind::Ffn};
    if (plan.contains(ref)) continue;
    if (ffn_[l].count != window_) {
      fail(ErrorKind::PrematureFinalization,
           "FFN " + std::to_string(l) + " has " + std::to_string(ffn_[l].count) + " of " +
               std::to_string(window_) + " window observations");
    }
  }
  skipped_p_ = plan.skip_set();
  scales_p_ = plan.scales();
  for (std::size_t l = 0; l < ffn_.size(); ++l) {
    const SublayerRef ref{l, SublayerKind::Ffn};
    if (plan.contains(ref)) continue;
    if (*mean_similarity(l) > beta) {
      extra_.insert(ref);
      skipped_p_.insert(ref);
      scales_p_[ref] = *mean_scale(l);
    }
  }
  beta_ = beta;
  finalized_ = true;
  return skipped_p_;
}

std::string_view to_string(OnlineMode mode) {
  switch (mode) {
    case OnlineMode::Off: return "off";
    case OnlineMode::PlannedWindow: return "planned-window";
    case OnlineMode::FullWindow: return "full-window";
  }
  return "?";
}

OnlineMode parse_online_mode(std::string_view text) {
  if (text == "off") return OnlineMode::Off;
  if (text == "planned-window") return OnlineMode::PlannedWindow;
  if (text == "full-window") return OnlineMode::FullWindow;
  fail(ErrorKind::Parse, "unknown online mode '" + std::string(text) + "'");
}

AdaptiveSchedule::AdaptiveSchedule(const SkipPlan& plan, std::size_t num_layers, OnlineMode mode,
                                   std::size_t window)
    : plan_(plan), mode_(mode), state_(window, num_layers) {
  offline_ = {plan.skip_set(), plan.scales()};
  if (mode_ != OnlineMode::Off && plan.strategy == Strategy::AdaSkip) {
    try {
      beta_ = derive_beta(plan);
      enabled_ = true;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::UndefinedThreshold) throw;
    }
  }
  window_plan_ = offline_;
  if (mode_ == OnlineMode::FullWindow) {
    std::erase_if(window_plan_.skip,
                  [](const SublayerRef& r) { return r.kind == SublayerKind::Ffn; });
  }
}

model::StepPlan AdaptiveSchedule::plan_for(Phase phase, std::size_t step) {
  if (phase == Phase::Prefill || !enabled_) return offline_;
  if (step < state_.window()) return window_plan_;
  if (!state_.finalized()) state_.finalize(plan_, beta_);
  return {state_.skipped_p(), state_.scales_p()};
}

model::PlanResolver AdaptiveSchedule::resolver() {
  return [this](Phase phase, std::size_t step) {
    active_ = plan_for(phase, step);
    return active_;
  };
}

model::Hook AdaptiveSchedule::hook() {
  return [this](const SublayerIO& io) {
    if (enabled_ && io.phase == Phase::Decode && !state_.finalized()) state_.observe(io);
  };
}

}  // namespace adaskip::policy
