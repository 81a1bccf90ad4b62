#pragma once

#include <cstddef>
#include <filesystem>

#include <json.hpp>

namespace adaskip::model {

struct ModelConfig {
  std::size_t num_layers = 8;
  std::size_t hidden_dim = 64;
  std::size_t num_heads = 4;
  std::size_t ffn_dim = 256;
  std::size_t vocab_size = 258;
  std::size_t max_seq_len = 1024;
  double norm_eps = 1e-5;

  std::size_t head_dim() const noexcept { return hidden_dim / num_heads; }
  std::size_t num_sublayers() const noexcept { return 2 * num_layers; }

  /// Throws Config on any violated invariant.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

ModelConfig load_config(const std::filesystem::path& path);

}  // namespace adaskip::model
