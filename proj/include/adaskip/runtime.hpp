#pragma once

// Pre-norm decoder-only transformer with sublayer skipping.
//
// Each layer is two residual blocks, attention then FFN:
//   b = a + Wo · Attn(rms_norm(a))           (attention)
//   b = a + Wdown · silu(Wup · rms_norm(a))  (FFN)
// where a and b are residual-stream vectors. A skipped block with scale s
// produces b = s · a and, for attention, writes no KV entries.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "adaskip/model_config.hpp"
#include "adaskip/sublayer.hpp"
#include "adaskip/tensor.hpp"
#include "adaskip/tokenizer.hpp"
#include "adaskip/weights.hpp"

namespace adaskip::model {

using tokenizer::Token;

/// Called synchronously for every executed (non-skipped) sublayer and token.
using Hook = std::function<void(const SublayerIO&)>;

class KvCache {
 public:
  KvCache() = default;
  KvCache(std::size_t num_layers, std::size_t hidden_dim);

  /// Rows of (num_heads * head_dim) keys, one per cached token.
  std::span<const double> keys(std::size_t layer) const { return layers_.at(layer).keys; }
  std::span<const double> values(std::size_t layer) const { return layers_.at(layer).values; }
  std::size_t filled_len(std::size_t layer) const { return layers_.at(layer).filled; }

  /// Sum of filled_len over layers; one entry = one token's K and V for one layer.
  std::size_t total_entries() const;

  /// Tokens processed by this session so far (prompt + decoded inputs).
  std::size_t position() const noexcept { return position_; }
  std::size_t prompt_len() const noexcept { return prompt_len_; }
  std::size_t decode_steps() const noexcept { return position_ - prompt_len_; }
  std::size_t num_layers() const noexcept { return layers_.size(); }

 private:
  friend class Forward;

  struct Layer {
    std::vector<double> keys;
    std::vector<double> values;
    std::size_t filled = 0;
  };

  std::vector<Layer> layers_;
  std::size_t hidden_dim_ = 0;
  std::size_t position_ = 0;
  std::size_t prompt_len_ = 0;
};

struct PrefillResult {
  tensor::Vector logits;  // last prompt position
  KvCache kv;
  std::vector<SublayerIO> trace;  // filled only when keep_trace
  std::size_t executed = 0;       // sublayer executions over all positions
};

struct StepResult {
  tensor::Vector logits;
  std::vector<SublayerIO> trace;
  std::size_t executed = 0;
};

/// Multi-head causal attention of one query row against n_ctx cached rows.
/// q has hidden_dim entries; keys/values are n_ctx x hidden_dim row-major.
tensor::Vector attend(std::span<const double> q, std::span<const double> keys,
                      std::span<const double> values, std::size_t n_ctx, std::size_t num_heads);

/// Logits of the tied output head for a final residual-stream vector.
tensor::Vector output_logits(const Weights& weights, const ModelConfig& config,
                             std::span<const double> hidden);

PrefillResult prefill(const Weights& weights, const ModelConfig& config,
                      std::span<const Token> tokens, const SkipSet& skip = {},
                      const ScaleMap& scales = {}, const Hook& hook = {}, bool keep_trace = false);

/// Forwards one token at kv.position(). Attention sublayers executed here must
/// have a KV history covering every earlier position; otherwise the plan is
/// rejected with InconsistentPlan before any state changes.
StepResult decode_step(const Weights& weights, const ModelConfig& config, KvCache& kv, Token token,
                       const SkipSet& skip = {}, const ScaleMap& scales = {},
                       const Hook& hook = {}, bool keep_trace = false);

struct StepPlan {
  SkipSet skip;
  ScaleMap scales;
};

/// (phase, step) -> plan. Prefill is step 0; decode steps count from 0.
using PlanResolver = std::function<StepPlan(Phase, std::size_t)>;

struct GenerateOptions {
  std::size_t max_new_tokens = 0;
  /// Teacher forcing: decode step k feeds forced[k] instead of the model's
  /// own previous argmax. Must hold at least max_new_tokens - 1 tokens.
  std::optional<std::vector<Token>> forced;
  bool keep_logits = false;
};

struct GenerateResult {
  std::vector<Token> tokens;
  /// Prefill logits followed by each decode step's logits (when keep_logits).
  /// The prefill logits are kept even when max_new_tokens is 0.
  std::vector<tensor::Vector> logits;
  double ttft_seconds = 0.0;
  std::vector<double> decode_seconds;
  std::size_t prefill_executed = 0;
  std::vector<std::size_t> decode_executed;  // per decode step
  std::size_t prompt_len = 0;
  std::size_t kv_entries_after_prefill = 0;
};

/// Greedy generation: token k is the argmax of the k-th logits (ties go to the
/// lower id). Produces max_new_tokens tokens using max_new_tokens - 1 decode
/// steps; EOS does not stop generation.
GenerateResult generate(const Weights& weights, const ModelConfig& config,
                        std::span<const Token> prompt, const GenerateOptions& options,
                        const PlanResolver& plan_resolver = {}, const Hook& hook = {});

/// Index of the largest entry; the lowest index wins ties.
Token argmax(std::span<const double> logits);

}  // namespace adaskip::model
