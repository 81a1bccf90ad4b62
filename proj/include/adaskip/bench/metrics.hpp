#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "adaskip/profiler.hpp"
#include "adaskip/sublayer.hpp"
#include "adaskip/tensor.hpp"

namespace adaskip::bench {

/// |predicted ∩ top_k(actual)| / k, ranking as the offline plan does.
double hit_rate(const SkipSet& predicted, const profiler::SimilarityProfile& actual,
                std::size_t k, std::optional<SublayerKind> kind);

/// hit_rate averaged over per-task destination profiles.
double mean_hit_rate(const SkipSet& predicted,
                     std::span<const profiler::SimilarityProfile> actual, std::size_t k,
                     std::optional<SublayerKind> kind);

struct DivergenceReport {
  double top1_agreement = 1.0;
  double logit_cosine = 1.0;  // mean over steps
};

/// Per-step argmax agreement and logit cosine of test against reference.
DivergenceReport divergence(std::span<const tensor::Vector> reference,
                            std::span<const tensor::Vector> test);

// Analytic FLOP model, used only for ratios:
//   attention, prefill over L tokens:   4 d^2 L + 2 L^2 d
//   attention, one decode token at ctx: 4 d^2 + 2 ctx d
//   FFN, per token:                     2 d ffn_dim * 2 matrices
double attention_prefill_flops(std::size_t d, std::size_t prompt_len);
double attention_decode_flops(std::size_t d, std::size_t context_len);
double ffn_token_flops(std::size_t d, std::size_t ffn_dim);

}  // namespace adaskip::bench
