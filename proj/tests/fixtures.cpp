#include "fixtures.hpp"

#include <atomic>
#include <unistd.h>

namespace adaskip::fixtures {

model::ModelConfig desk_config() { return {}; }

model::ModelConfig tiny_config() {
  model::ModelConfig c;
  c.num_layers = 2;
  c.hidden_dim = 8;
  c.num_heads = 2;
  c.ffn_dim = 16;
  c.max_seq_len = 128;
  return c;
}

SkipSet PlantedModel::planted() const {
  SkipSet s(zeroed_ffn.begin(), zeroed_ffn.end());
  s.insert(near_copy_attention.begin(), near_copy_attention.end());
  return s;
}

PlantedModel planted_model(std::uint64_t seed) {
  PlantedModel p;
  p.config = desk_config();
  p.weights = model::init_model(p.config, seed);
  p.zeroed_ffn = {{3, SublayerKind::Ffn}, {5, SublayerKind::Ffn}};
  p.near_copy_attention = {{2, SublayerKind::Attention}, {6, SublayerKind::Attention}};
  for (const auto& r : p.zeroed_ffn) model::plant_identity(p.weights, r, 0.0);
  for (const auto& r : p.near_copy_attention) model::plant_identity(p.weights, r, kNearCopyGain);
  return p;
}

std::vector<Task> random_tasks(const std::string& id_prefix, std::size_t count, std::size_t min_len,
                               std::size_t max_len, std::size_t max_new_tokens, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_int_distribution<int> ch(32, 126);
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < count; ++i) {
    Task t;
    t.id = id_prefix + std::to_string(i);
    const std::size_t n = len(rng);
    for (std::size_t k = 0; k < n; ++k) t.prompt.push_back(static_cast<char>(ch(rng)));
    t.max_new_tokens = max_new_tokens;
    tasks.push_back(std::move(t));
  }
  return tasks;
}

profiler::SimilarityProfile random_profile(std::size_t num_layers, std::mt19937_64& rng,
                                           std::size_t tie_levels) {
  profiler::SimilarityProfile p;
  p.model_id = "random";
  p.phase = Phase::Prefill;
  p.task_count = 1;
  p.task_ids = {"calib"};
  std::uniform_real_distribution<double> sim(-0.2, 1.0);
  std::uniform_real_distribution<double> scale(0.5, 2.0);
  std::uniform_int_distribution<std::size_t> level(0, tie_levels == 0 ? 0 : tie_levels - 1);
  for (const auto& ref : all_sublayers(num_layers)) {
    const double s = tie_levels ? 0.5 + 0.1 * static_cast<double>(level(rng)) : sim(rng);
    p.entries.push_back({ref, s, scale(rng), 10});
  }
  return p;
}

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("adaskip-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace adaskip::fixtures
