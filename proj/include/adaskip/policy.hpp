#pragma once

// Skip-plan construction: similarity-ranked offline plans and the fixed
// layer-wise baselines.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "adaskip/profiler.hpp"
#include "adaskip/sublayer.hpp"

namespace adaskip::policy {

enum class Strategy { AdaSkip, EarlySkip, Periodic, EarlyExit, Full };

/// "adaskip", "early", "periodic", "exit", "full".
std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view text);

struct PlanEntry {
  SublayerRef sublayer;
  double scale = 1.0;
  /// Offline mean similarity; present for similarity-ranked plans.
  std::optional<double> similarity;

  bool operator==(const PlanEntry&) const = default;
};

struct SkipPlan {
  Strategy strategy = Strategy::AdaSkip;
  double alpha = 1.0;
  std::size_t m = 0;
  std::vector<PlanEntry> skipped;  // sorted by sublayer
  bool protect_first = false;
  bool protect_last = false;
  std::string source_profile_digest;

  SkipSet skip_set() const;
  ScaleMap scales() const;
  bool contains(const SublayerRef& ref) const;
  std::size_t size() const noexcept { return skipped.size(); }

  bool operator==(const SkipPlan&) const = default;
};

/// m = M - M/alpha rounded half away from zero, capped at M - 1.
/// Throws InvalidRatio for alpha < 1 (or non-finite).
std::size_t skip_count(std::size_t num_layers, double alpha);

/// M / (M - m). Throws Validation when m >= M.
double theoretical_speedup(std::size_t num_layers, std::size_t m);

struct OfflineOptions {
  bool protect_first = false;
  bool protect_last = false;
};

/// Sorts all 2M prefill entries by mean similarity, descending, with the lower
/// (layer, kind) first on ties, and skips the leading 2m with their mean scales.
SkipPlan build_offline_plan(const profiler::SimilarityProfile& profile, double alpha,
                            const OfflineOptions& options = {});

/// Same ranking with an explicit even sublayer target (2m) instead of alpha.
SkipPlan build_offline_plan_for_target(const profiler::SimilarityProfile& profile,
                                       std::size_t target_sublayers,
                                       const OfflineOptions& options = {});

/// Top-k sublayers of a profile by the plan ordering, restricted to kinds
/// (nullopt = both). Throws InvalidK when k is 0 or exceeds the candidates.
std::vector<SublayerRef> top_k(const profiler::SimilarityProfile& profile, std::size_t k,
                               std::optional<SublayerKind> kind);

/// Fixed layer-wise plans; each skipped layer contributes both sublayers with
/// scale 1. EarlySkip protects layer 0, Periodic protects 0 and M-1.
SkipPlan baseline_plan(Strategy strategy, std::size_t num_layers, std::size_t m_layers);

/// Minimum profile similarity over plan.skipped.
/// Throws UndefinedThreshold for an empty plan.
double derive_beta(const SkipPlan& plan, const profiler::SimilarityProfile& profile);

/// Same, using the similarities recorded in the plan itself.
double derive_beta(const SkipPlan& plan);

nlohmann::json to_json(const SkipPlan& plan);
SkipPlan plan_from_json(const nlohmann::json& j);
std::string serialize(const SkipPlan& plan);
std::string digest(const SkipPlan& plan);
void save_plan(const std::filesystem::path& path, const SkipPlan& plan);
SkipPlan load_plan(const std::filesystem::path& path);

}  // namespace adaskip::policy
