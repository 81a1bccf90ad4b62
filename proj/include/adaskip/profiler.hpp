#pragma once

// Offline importance learning: per-sublayer token means of IO cosine
// similarity and output/input norm ratio, pooled over tasks by token count.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "adaskip/model_config.hpp"
#include "adaskip/runtime.hpp"
#include "adaskip/sublayer.hpp"
#include "adaskip/task.hpp"
#include "adaskip/weights.hpp"

namespace adaskip::profiler {

struct SublayerStats {
  SublayerRef sublayer;
  Phase phase = Phase::Prefill;
  double sum_similarity = 0.0;
  double sum_scale = 0.0;
  std::size_t token_count = 0;

  /// Adds cos(a, b) and |b|/|a| for one token. Throws DegenerateInput on a
  /// zero-norm vector and ContractViolation when io belongs elsewhere.
  void record(const SublayerIO& io);
};

struct ProfileEntry {
  SublayerRef sublayer;
  double mean_similarity = 0.0;
  double mean_scale = 0.0;
  std::size_t token_count = 0;

  bool operator==(const ProfileEntry&) const = default;
};

/// Throws EmptyStats when nothing was recorded.
ProfileEntry finalize(const SublayerStats& stats);

struct SimilarityProfile {
  std::string model_id;
  Phase phase = Phase::Prefill;
  std::size_t task_count = 0;
  std::vector<std::string> task_ids;  // sorted
  std::vector<ProfileEntry> entries;  // sorted by sublayer

  const ProfileEntry* find(const SublayerRef& ref) const;
  /// Layer count implied by a complete profile (entries / 2).
  std::size_t num_layers() const noexcept { return entries.size() / 2; }

  bool operator==(const SimilarityProfile&) const = default;
};

/// Token-weighted pooling. A profile without entries is the identity.
/// Throws Incompatible on model/phase/sublayer-set mismatch.
SimilarityProfile merge_profiles(const SimilarityProfile& a, const SimilarityProfile& b);

/// Collects SublayerIO events for one task, keyed by phase and sublayer.
class ProfileAccumulator {
 public:
  explicit ProfileAccumulator(std::size_t num_layers);

  void record(const SublayerIO& io);
  void set_phase_enabled(Phase phase, bool enabled);

  /// Entries for every sublayer that saw at least one record.
  SimilarityProfile finalize(const std::string& model_id, Phase phase,
                             std::vector<std::string> task_ids) const;

  const SublayerStats& stats(Phase phase, const SublayerRef& ref) const;

 private:
  std::vector<SublayerStats> prefill_;
  std::vector<SublayerStats> decode_;
  bool prefill_on_ = true;
  bool decode_on_ = true;
};

enum class PhaseSelector { Prefill, Decode, Both };
PhaseSelector parse_phase_selector(std::string_view text);

struct ProfileSet {
  std::optional<SimilarityProfile> prefill;
  std::optional<SimilarityProfile> decode;
};

inline constexpr std::size_t kDefaultDecodeLen = 32;

/// Profiles one task with no skipping. Decode profiling runs decode_len greedy
/// decode steps after the prompt.
ProfileSet profile_task(const model::Weights& weights, const model::ModelConfig& config,
                        const Task& task, PhaseSelector phases,
                        std::size_t decode_len = kDefaultDecodeLen);

/// Profiles every task (concurrently, see thread_budget()) and merges the
/// per-task profiles in task order. Errors carry the failing task id.
ProfileSet profile_tasks(const model::Weights& weights, const model::ModelConfig& config,
                         std::span<const Task> tasks, PhaseSelector phases,
                         std::size_t decode_len = kDefaultDecodeLen);

nlohmann::json to_json(const SimilarityProfile& profile);
SimilarityProfile profile_from_json(const nlohmann::json& j);

/// Canonical serialisation (compact JSON); the digest is computed over it.
std::string serialize(const SimilarityProfile& profile);
std::string digest(const SimilarityProfile& profile);

void save_profile(const std::filesystem::path& path, const SimilarityProfile& profile);
SimilarityProfile load_profile(const std::filesystem::path& path);

}  // namespace adaskip::profiler
