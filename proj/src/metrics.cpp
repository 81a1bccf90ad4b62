#include "adaskip/bench/metrics.hpp"

#include "adaskip/error.hpp"
#include "adaskip/policy.hpp"
#include "adaskip/runtime.hpp"

namespace adaskip::bench {

double hit_rate(const SkipSet& predicted, const profiler::SimilarityProfile& actual,
                std::size_t k, std::optional<SublayerKind> kind) {
  const auto truth = policy::top_k(actual, k, kind);
  std::size_t hits = 0;
  for (const auto& ref : truth) hits += predicted.count(ref);
  return static_cast<double>(hits) / static_cast<double>(k);
}

double mean_hit_rate(const SkipSet& predicted,
                     std::span<const profiler::SimilarityProfile> actual, std::size_t k,
                     std::optional<SublayerKind> kind) {
  if (actual.empty()) fail(ErrorKind::Validation, "mean_hit_rate: no destination profiles");
  double total = 0.0;
  for (const auto& p : actual) total += hit_rate(predicted, p, k, kind);
  return total / static_cast<double>(actual.size());
}

DivergenceReport divergence(std::span<const tensor::Vector> reference,
                            std::span<const tensor::Vector> test) {
  if (reference.size() != test.size() || reference.empty()) {
    fail(ErrorKind::ContractViolation, "divergence: step counts " + std::to_string(reference.size()) +
                                           " and " + std::to_string(test.size()));
  }
  std::size_t agree = 0;
  double cos_total = 0.0;
  for (std::size_t s = 0; s < reference.size(); ++s) {
    if (reference[s].size() != test[s].size()) {
      fail(ErrorKind::ContractViolation, "divergence: vocab sizes differ at step " + std::to_string(s));
    }
    agree += model::argmax(reference[s]) == model::argmax(test[s]);
    cos_total += tensor::cosine_similarity(reference[s], test[s]);
  }
  const double n = static_cast<double>(reference.size());
  return {static_cast<double>(agree) / n, cos_total / n};
}

double attention_prefill_flops(std::size_t d, std::size_t prompt_len) {
  const double dd = static_cast<double>(d);
  const double L = static_cast<double>(prompt_len);
  return 4.0 * dd * dd * L + 2.0 * L * L * dd;
}

double attention_decode_flops(std::size_t d, std::size_t context_len) {
  const double dd = static_cast<double>(d);
  return 4.0 * dd * dd + 2.0 * static_cast<double>(context_len) * dd;
}

double ffn_token_flops(std::size_t d, std::size_t ffn_dim) {
  return 2.0 * static_cast<double>(d) * static_cast<double>(ffn_dim) * 2.0;
}

}  // namespace adaskip::bench
