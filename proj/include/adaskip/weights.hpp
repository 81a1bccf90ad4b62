#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "adaskip/model_config.hpp"
#include "adaskip/sublayer.hpp"
#include "adaskip/tensor.hpp"

namespace adaskip::model {

// Projections act on row vectors: y = x · W, so W is (in_dim x out_dim).
struct LayerWeights {
  tensor::Vector attn_norm;  // d
  tensor::Matrix wq, wk, wv, wo;  // d x d
  tensor::Vector ffn_norm;   // d
  tensor::Matrix w_up;       // d x ffn_dim
  tensor::Matrix w_down;     // ffn_dim x d

  bool operator==(const LayerWeights&) const = default;
};

/// Every value is exactly representable as an IEEE binary32 so the f32 weight
/// file round-trips without loss. The output head is tied to the embedding.
struct Weights {
  tensor::Matrix embedding;  // vocab x d
  std::vector<LayerWeights> layers;
  tensor::Vector final_norm;  // d

  bool operator==(const Weights&) const = default;
};

/// Seeded initialisation. Draws come from std::mt19937_64(seed) in the order
/// embedding, then per layer wq, wk, wv, wo, w_up, w_down, each row-major.
/// A draw x maps to u = (x >> 11) * 2^-53 and the weight is
/// float((2u - 1) / sqrt(d)). Norm gains are 1.
Weights init_model(const ModelConfig& config, std::uint64_t seed);

/// Multiplies the sublayer's output projection (wo or w_down) by gain. With
/// gain 0 the block is exactly the identity on the residual stream; a small
/// gain gives a near-copy block.
void plant_identity(Weights& weights, const SublayerRef& sublayer, double gain = 0.0);

/// Throws Config when any tensor shape disagrees with config.
void check_shapes(const Weights& weights, const ModelConfig& config);

// Weight file: "ADSK" | u32le version | u64le header length | JSON header |
// f32le payload. The header maps tensor name -> {"shape", "dtype":"f32",
// "offset"}, offsets counted in bytes from the start of the payload.
inline constexpr std::uint32_t kWeightFormatVersion = 1;

std::string encode_weights(const Weights& weights);
Weights decode_weights(std::string_view bytes, const ModelConfig& config);

void save_weights(const std::filesystem::path& path, const Weights& weights);
Weights load_weights(const std::filesystem::path& path, const ModelConfig& config);

/// SHA-256 over the encoded weight file.
std::string checksum(const Weights& weights);

/// Short identifier derived from the checksum, used to key profiles.
std::string model_id(const Weights& weights);

}  // namespace adaskip::model
