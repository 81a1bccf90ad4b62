#include "adaskip/policy.hpp"

#include <algorithm>
#include <cmath>

#include "adaskip/digest.hpp"
#include "adaskip/error.hpp"
#include "adaskip/fileio.hpp"

namespace adaskip::policy {

using profiler::ProfileEntry;
using profiler::SimilarityProfile;

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::AdaSkip: return "adaskip";
    case Strategy::EarlySkip: return "early";
    case Strategy::Periodic: return "periodic";
    case Strategy::EarlyExit: return "exit";
    case Strategy::Full: return "full";
  }
  return "?";
}

Strategy parse_strategy(std::string_view text) {
  for (Strategy s : {Strategy::AdaSkip, Strategy::EarlySkip, Strategy::Periodic,
                     Strategy::EarlyExit, Strategy::Full}) {
    if (text == to_string(s)) return s;
  }
  fail(ErrorKind::Parse, "unknown strategy '" + std::string(text) + "'");
}

SkipSet SkipPlan::skip_set() const {
  SkipSet out;
  for (const auto& e : skipped) out.insert(e.sublayer);
  return out;
}

ScaleMap SkipPlan::scales() const {
  ScaleMap out;
  for (const auto& e : skipped) out[e.sublayer] = e.scale;
  return out;
}

bool SkipPlan::contains(const SublayerRef& ref) const {
  return std::any_of(skipped.begin(), skipped.end(),
                     [&](const PlanEntry& e) { return e.sublayer == ref; });
}

std::size_t skip_count(std::size_t num_layers, double alpha) {
  if (num_layers == 0) fail(ErrorKind::Validation, "skip_count: model has no layers");
  if (!std::isfinite(alpha) || alpha < 1.0) {
    fail(ErrorKind::InvalidRatio, "alpha must be >= 1, got " + std::to_string(alpha));
  }
  const double M = static_cast<double>(num_layers);
  const auto m = static_cast<std::size_t>(std::llround(M - M / alpha));
  return std::min(m, num_layers - 1);
}

double theoretical_speedup(std::size_t num_layers, std::size_t m) {
  if (m >= num_layers) {
    fail(ErrorKind::Validation, "m = " + std::to_string(m) + " must be below M = " +
                                    std::to_string(num_layers));
  }
  return static_cast<double>(num_layers) / static_cast<double>(num_layers - m);
}

namespace {

// Descending similarity; canonical sublayer order breaks ties.
bool ranks_before(const ProfileEntry& a, const ProfileEntry& b) {
  if (a.mean_similarity != b.mean_similarity) return a.mean_similarity > b.mean_similarity;
  return a.sublayer < b.sublayer;
}

std::size_t require_complete(const SimilarityProfile& profile) {
  if (profile.entries.empty() || profile.entries.size() % 2 != 0) {
    fail(ErrorKind::IncompleteProfile, "profile has " + std::to_string(profile.entries.size()) +
                                           " entries; expected 2 per layer");
  }
  const std::size_t layers = profile.entries.size() / 2;
  for (const auto& ref : all_sublayers(layers)) {
    if (!profile.find(ref)) {
      fail(ErrorKind::IncompleteProfile, "profile is missing sublayer " + to_string(ref));
    }
  }
  return layers;
}

SkipPlan select_top(const SimilarityProfile& profile, std::size_t num_layers,
                    std::size_t target, const OfflineOptions& options) {
  std::vector<ProfileEntry> candidates;
  for (const auto& e : profile.entries) {
    if (options.protect_first && e.sublayer.layer == 0) continue;
    if (options.protect_last && e.sublayer.layer == num_layers - 1) continue;
    candidates.push_back(e);
  }
  if (target > candidates.size()) {
    fail(ErrorKind::InfeasiblePlan, "cannot skip " + std::to_string(target) + " of " +
                                        std::to_string(candidates.size()) + " eligible sublayers");
  }
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(target),
                    candidates.end(), ranks_before);

  SkipPlan plan;
  plan.strategy = Strategy::AdaSkip;
  plan.m = target / 2;
  plan.protect_first = options.protect_first;
  plan.protect_last = options.protect_last;
  plan.source_profile_digest = profiler::digest(profile);
  for (std::size_t i = 0; i < target; ++i) {
    const auto& e = candidates[i];
    plan.skipped.push_back({e.sublayer, e.mean_scale, e.mean_similarity});
  }
  std::sort(plan.skipped.begin(), plan.skipped.end(),
            [](const PlanEntry& a, const PlanEntry& b) { return a.sublayer < b.sublayer; });
  return plan;
}

void require_prefill(const SimilarityProfile& profile) {
  if (profile.phase != Phase::Prefill) {
    fail(ErrorKind::Validation, "offline plans are built from a prefill profile");
  }
}

}  // namespace

SkipPlan build_offline_plan(const SimilarityProfile& profile, double alpha,
                            const OfflineOptions& options) {
  require_prefill(profile);
  const std::size_t layers = require_complete(profile);
  const std::size_t m = skip_count(layers, alpha);
  SkipPlan plan = select_top(profile, layers, std::min(2 * m, 2 * layers), options);
  plan.alpha = alpha;
  plan.m = m;
  return plan;
}

SkipPlan build_offline_plan_for_target(const SimilarityProfile& profile, std::size_t target,
                                       const OfflineOptions& options) {
  require_prefill(profile);
  const std::size_t layers = require_complete(profile);
  if (target % 2 != 0) {
    fail(ErrorKind::Validation, "target sublayer count must be even (2m), got " + std::to_string(target));
  }
  if (target / 2 >= layers) {
    fail(ErrorKind::InfeasiblePlan, "target " + std::to_string(target) + " leaves no layer budget (M = " +
                                        std::to_string(layers) + ")");
  }
  SkipPlan plan = select_top(profile, layers, target, options);
  plan.alpha = theoretical_speedup(layers, target / 2);
  return plan;
}

std::vector<SublayerRef> top_k(const SimilarityProfile& profile, std::size_t k,
                               std::optional<SublayerKind> kind) {
  std::vector<ProfileEntry> candidates;
  for (const auto& e : profile.entries) {
    if (!kind || e.sublayer.kind == *kind) candidates.push_back(e);
  }
  if (k == 0 || k > candidates.size()) {
    fail(ErrorKind::InvalidK, "k = " + std::to_string(k) + " with " +
                                  std::to_string(candidates.size()) + " candidate sublayers");
  }
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                    candidates.end(), ranks_before);
  std::vector<SublayerRef> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(candidates[i].sublayer);
  return out;
}

SkipPlan baseline_plan(Strategy strategy, std::size_t num_layers, std::size_t m_layers) {
  if (m_layers >= num_layers) {
    fail(ErrorKind::InfeasiblePlan, "cannot skip " + std::to_string(m_layers) + " of " +
                                        std::to_string(num_layers) + " layers");
  }
  SkipPlan plan;
  plan.strategy = strategy;
  plan.m = m_layers;
  plan.alpha = theoretical_speedup(num_layers, m_layers);

  std::vector<std::size_t> layers;
  switch (strategy) {
    case Strategy::EarlySkip:
      plan.protect_first = true;
      for (std::size_t l = 1; l <= m_layers; ++l) layers.push_back(l);
      break;
    case Strategy::Periodic: {
      plan.protect_first = plan.protect_last = true;
      const std::size_t span = num_layers >= 2 ? num_layers - 2 : 0;
      if (m_layers > span) {
        fail(ErrorKind::InfeasiblePlan, "periodic skipping of " + std::to_string(m_layers) +
                                            " layers needs M >= " + std::to_string(m_layers + 2));
      }
      // Centre of each of m_layers equal slices of [1, M-2].
      for (std::size_t i = 0; i < m_layers; ++i) {
        layers.push_back(1 + ((2 * i + 1) * span) / (2 * m_layers));
      }
      break;
    }
    case Strategy::EarlyExit:
      for (std::size_t l = num_layers - m_layers; l < num_layers; ++l) layers.push_back(l);
      break;
    case Strategy::Full:
      if (m_layers != 0) fail(ErrorKind::Validation, "the full model skips nothing");
      break;
    case Strategy::AdaSkip:
      fail(ErrorKind::Validation, "adaskip plans are built from a profile");
  }
  for (std::size_t l : layers) {
    plan.skipped.push_back({{l, SublayerKind::Attention}, 1.0, std::nullopt});
    plan.skipped.push_back({{l, SublayerKind::Ffn}, 1.0, std::nullopt});
  }
  return plan;
}

double derive_beta(const SkipPlan& plan, const SimilarityProfile& profile) {
  if (plan.skipped.empty()) fail(ErrorKind::UndefinedThreshold, "skipped set is empty");
  double beta = 0.0;
  bool first = true;
  for (const auto& e : plan.skipped) {
    const auto* entry = profile.find(e.sublayer);
    if (!entry) fail(ErrorKind::IncompleteProfile, "profile lacks skipped sublayer " + to_string(e.sublayer));
    beta = first ? entry->mean_similarity : std::min(beta, entry->mean_similarity);
    first = false;
  }
  return beta;
}

double derive_beta(const SkipPlan& plan) {
  if (plan.skipped.empty()) fail(ErrorKind::UndefinedThreshold, "skipped set is empty");
  double beta = 0.0;
  bool first = true;
  for (const auto& e : plan.skipped) {
    if (!e.similarity) {
      fail(ErrorKind::UndefinedThreshold, "plan carries no similarity for " + to_string(e.sublayer));
    }
    beta = first ? *e.similarity : std::min(beta, *e.similarity);
    first = false;
  }
  return beta;
}

nlohmann::json to_json(const SkipPlan& plan) {
  nlohmann::json skipped = nlohmann::json::array();
  for (const auto& e : plan.skipped) {
    nlohmann::json item{{"layer", e.sublayer.layer},
                        {"kind", adaskip::to_string(e.sublayer.kind)},
                        {"scale", e.scale}};
    if (e.similarity) item["similarity"] = *e.similarity;
    skipped.push_back(std::move(item));
  }
  return {{"strategy", to_string(plan.strategy)},
          {"alpha", plan.alpha},
          {"m", plan.m},
          {"skipped", skipped},
          {"protect_first", plan.protect_first},
          {"protect_last", plan.protect_last},
          {"source_profile_digest", plan.source_profile_digest}};
}

SkipPlan plan_from_json(const nlohmann::json& j) {
  SkipPlan plan;
  try {
    plan.strategy = parse_strategy(j.at("strategy").get<std::string>());
    plan.alpha = j.at("alpha").get<double>();
    plan.m = j.at("m").get<std::size_t>();
    plan.protect_first = j.value("protect_first", false);
    plan.protect_last = j.value("protect_last", false);
    plan.source_profile_digest = j.value("source_profile_digest", std::string{});
    for (const auto& s : j.at("skipped")) {
      PlanEntry e;
      e.sublayer = {s.at("layer").get<std::size_t>(), parse_kind(s.at("kind").get<std::string>())};
      e.scale = s.at("scale").get<double>();
      if (s.contains("similarity")) e.similarity = s.at("similarity").get<double>();
      if (!std::isfinite(e.scale)) fail(ErrorKind::Validation, "plan: non-finite scale");
      plan.skipped.push_back(e);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, std::string("plan: ") + e.what());
  }
  std::sort(plan.skipped.begin(), plan.skipped.end(),
            [](const PlanEntry& a, const PlanEntry& b) { return a.sublayer < b.sublayer; });
  for (std::size_t i = 1; i < plan.skipped.size(); ++i) {
    if (plan.skipped[i].sublayer == plan.skipped[i - 1].sublayer) {
      fail(ErrorKind::Validation, "plan: duplicate sublayer " + to_string(plan.skipped[i].sublayer));
    }
  }
  return plan;
}

std::string serialize(const SkipPlan& plan) { return to_json(plan).dump(); }

std::string digest(const SkipPlan& plan) { return sha256_hex(serialize(plan)); }

void save_plan(const std::filesystem::path& path, const SkipPlan& plan) {
  write_file_atomic(path, to_json(plan).dump(2) + "\n");
}

SkipPlan load_plan(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return plan_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::Parse, path.string() + ": " + e.what());
  }
}

}  // namespace adaskip::policy
