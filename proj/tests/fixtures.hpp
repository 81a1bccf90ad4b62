#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "adaskip/model_config.hpp"
#include "adaskip/profiler.hpp"
#include "adaskip/sublayer.hpp"
#include "adaskip/task.hpp"
#include "adaskip/weights.hpp"

namespace adaskip::fixtures {

/// M=8, d=64, 4 heads, ffn 256, vocab 258, 1024 positions.
model::ModelConfig desk_config();

/// M=2, d=8, 2 heads, ffn 16: fast enough for exhaustive loops.
model::ModelConfig tiny_config();

/// Exactly-identity FFNs (zeroed w_down) at layers 3 and 5 and near-copy
/// attention (wo scaled by 1e-6) at layers 2 and 6 of the desk model.
struct PlantedModel {
  model::ModelConfig config;
  model::Weights weights;
  std::vector<SublayerRef> zeroed_ffn;
  std::vector<SublayerRef> near_copy_attention;
  SkipSet planted() const;
};
PlantedModel planted_model(std::uint64_t seed = 7);

inline constexpr double kNearCopyGain = 1e-6;

/// Printable-ASCII prompts of random length in [min_len, max_len].
std::vector<Task> random_tasks(const std::string& id_prefix, std::size_t count, std::size_t min_len,
                               std::size_t max_len, std::size_t max_new_tokens, std::uint64_t seed);

/// Random complete profile over num_layers layers. With tie_levels > 0
/// similarities are drawn from that many discrete values to force ties.
profiler::SimilarityProfile random_profile(std::size_t num_layers, std::mt19937_64& rng,
                                           std::size_t tie_levels = 0);

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0);

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace adaskip::fixtures
