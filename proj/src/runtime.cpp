#include "adaskip/runtime.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "adaskip/error.hpp"

namespace adaskip::model {

using tensor::Matrix;
using tensor::Vector;

KvCache::KvCache(std::size_t num_layers, std::size_t hidden_dim)
    : layers_(num_layers), hidden_dim_(hidden_dim) {}

std::size_t KvCache::total_entries() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.filled;
  return n;
}

Vector attend(std::span<const double> q, std::span<const double> keys,
              std::span<const double> values, std::size_t n_ctx, std::size_t num_heads) {
  const std::size_t d = q.size();
  if (n_ctx == 0 || keys.size() < n_ctx * d || values.size() < n_ctx * d || d % num_heads != 0) {
    fail(ErrorKind::ContractViolation, "attend: inconsistent shapes");
  }
  const std::size_t hd = d / num_heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(hd));
  Vector out(d, 0.0);
  Matrix scores(1, n_ctx);
  for (std::size_t h = 0; h < num_heads; ++h) {
    const auto qh = q.subspan(h * hd, hd);
    for (std::size_t s = 0; s < n_ctx; ++s) {
      scores(0, s) = tensor::dot(qh, keys.subspan(s * d + h * hd, hd)) * inv_sqrt;
    }
    const Matrix probs = tensor::softmax_rows(scores);
    for (std::size_t s = 0; s < n_ctx; ++s) {
      const double p = probs(0, s);
      const auto vh = values.subspan(s * d + h * hd, hd);
      for (std::size_t i = 0; i < hd; ++i) out[h * hd + i] += p * vh[i];
    }
  }
  return out;
}

Vector output_logits(const Weights& weights, const ModelConfig& config,
                     std::span<const double> hidden) {
  const Vector normed = tensor::rms_norm(hidden, weights.final_norm, config.norm_eps);
  Vector logits(config.vocab_size);
  for (std::size_t v = 0; v < config.vocab_size; ++v) {
    logits[v] = tensor::dot(normed, weights.embedding.row(v));
  }
  return logits;
}

Token argmax(std::span<const double> logits) {
  if (logits.empty()) fail(ErrorKind::ContractViolation, "argmax of empty logits");
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[best]) best = i;
  }
  return static_cast<Token>(best);
}

// Shared sublayer machinery for prefill and decode. Holds the dense per-call
// skip table so the hot loops avoid set lookups.
class Forward {
 public:
  Forward(const Weights& w, const ModelConfig& c, const SkipSet& skip, const ScaleMap& scales,
          const Hook& hook, bool keep_trace, std::vector<SublayerIO>& trace)
      : w_(w), c_(c), hook_(hook), keep_trace_(keep_trace), trace_(trace),
        skip_scale_(c.num_sublayers(), std::numeric_limits<double>::quiet_NaN()),
        skipped_(c.num_sublayers(), false) {
    for (const auto& ref : skip) {
      if (ref.layer >= c.num_layers) {
        fail(ErrorKind::Config, "skip set names sublayer " + to_string(ref) + " beyond " +
                                    std::to_string(c.num_layers) + " layers");
      }
      const auto it = scales.find(ref);
      if (it == scales.end()) {
        fail(ErrorKind::Config, "no compensation scale for skipped sublayer " + to_string(ref));
      }
      if (!std::isfinite(it->second)) {
        fail(ErrorKind::Config, "non-finite scale for skipped sublayer " + to_string(ref));
      }
      skipped_[ref.index()] = true;
      skip_scale_[ref.index()] = it->second;
    }
  }

  bool skipped(std::size_t layer, SublayerKind kind) const {
    return skipped_[SublayerRef{layer, kind}.index()];
  }
  double scale(std::size_t layer, SublayerKind kind) const {
    return skip_scale_[SublayerRef{layer, kind}.index()];
  }

  void check_tokens(std::span<const Token> tokens) const {
    for (Token t : tokens) {
      if (t >= c_.vocab_size) {
        fail(ErrorKind::Input, "token " + std::to_string(t) + " outside vocabulary of " +
                                   std::to_string(c_.vocab_size));
      }
    }
  }

  // Rejects a step that would execute attention without a complete KV history.
  void check_kv(const KvCache& kv) const {
    for (std::size_t l = 0; l < c_.num_layers; ++l) {
      if (skipped(l, SublayerKind::Attention)) continue;
      if (kv.layers_[l].filled != kv.position_) {
        fail(ErrorKind::InconsistentPlan,
             "attention sublayer " + to_string(SublayerRef{l, SublayerKind::Attention}) +
                 " has KV for " + std::to_string(kv.layers_[l].filled) + " of " +
                 std::to_string(kv.position_) + " earlier tokens; it was skipped before and must stay skipped");
      }
    }
  }

  void emit(SublayerRef ref, Phase phase, std::size_t token_index, std::span<const double> in,
            std::span<const double> out) {
    ++executed_;
    if (!hook_ && !keep_trace_) return;
    SublayerIO io{ref, phase, token_index, Vector(in.begin(), in.end()),
                  Vector(out.begin(), out.end())};
    if (hook_) hook_(io);
    if (keep_trace_) trace_.push_back(std::move(io));
  }

  static void append_rows(std::vector<double>& dst, const Matrix& m) {
    dst.insert(dst.end(), m.data().begin(), m.data().end());
  }

  static void add_into(std::span<double> dst, std::span<const double> src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }

  Matrix normed_rows(const Matrix& h, const Vector& gain) const {
    Matrix x(h.rows(), h.cols());
    for (std::size_t t = 0; t < h.rows(); ++t) {
      const Vector n = tensor::rms_norm(h.row(t), gain, c_.norm_eps);
      std::copy(n.begin(), n.end(), x.row(t).begin());
    }
    return x;
  }

  // Runs sublayer (layer, kind) over every row of h in place. Rows are
  // consecutive positions starting at kv.position_; token_base is the first
  // row's token_index.
  void run_sublayer(Matrix& h, std::size_t layer, SublayerKind kind, Phase phase,
                    std::size_t token_base, KvCache& kv) {
    const SublayerRef ref{layer, kind};
    if (skipped(layer, kind)) {
      const double s = scale(layer, kind);
      for (std::size_t t = 0; t < h.rows(); ++t) {
        const Vector scaled = tensor::scale_vector(h.row(t), s);
        std::copy(scaled.begin(), scaled.end(), h.row(t).begin());
      }
      return;
    }
    const auto& lw = w_.layers[layer];
    Matrix delta;
    if (kind == SublayerKind::Attention) {
      const Matrix x = normed_rows(h, lw.attn_norm);
      const Matrix q = tensor::matmul(x, lw.wq);
      auto& cache = kv.layers_[layer];
      append_rows(cache.keys, tensor::matmul(x, lw.wk));
      append_rows(cache.values, tensor::matmul(x, lw.wv));
      Matrix mixed(h.rows(), h.cols());
      for (std::size_t t = 0; t < h.rows(); ++t) {
        const std::size_t n_ctx = cache.filled + t + 1;
        const Vector o = attend(q.row(t), cache.keys, cache.values, n_ctx, c_.num_heads);
        std::copy(o.begin(), o.end(), mixed.row(t).begin());
      }
      cache.filled += h.rows();
      delta = tensor::matmul(mixed, lw.wo);
    } else {
      const Matrix x = normed_rows(h, lw.ffn_norm);
      Matrix up = tensor::matmul(x, lw.w_up);
      for (double& v : up.data()) v = tensor::silu(v);
      delta = tensor::matmul(up, lw.w_down);
    }
    const bool observe = hook_ || keep_trace_;
    Vector before;
    for (std::size_t t = 0; t < h.rows(); ++t) {
      auto row = h.row(t);
      if (observe) before.assign(row.begin(), row.end());
      add_into(row, delta.row(t));
      if (observe) {
        emit(ref, phase, token_base + t, before, row);
      } else {
        ++executed_;
      }
    }
  }

  void run_layers(Matrix& h, Phase phase, std::size_t token_base, KvCache& kv) {
    for (std::size_t l = 0; l < c_.num_layers; ++l) {
      run_sublayer(h, l, SublayerKind::Attention, phase, token_base, kv);
      run_sublayer(h, l, SublayerKind::Ffn, phase, token_base, kv);
    }
  }

  Matrix embed(std::span<const Token> tokens) const {
    Matrix h(tokens.size(), c_.hidden_dim);
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      const auto e = w_.embedding.row(tokens[t]);
      std::copy(e.begin(), e.end(), h.row(t).begin());
    }
    return h;
  }

  std::size_t executed() const noexcept { return executed_; }

  static void advance(KvCache& kv, std::size_t tokens, bool prompt) {
    kv.position_ += tokens;
    if (prompt) kv.prompt_len_ = kv.position_;
  }

 private:
  const Weights& w_;
  const ModelConfig& c_;
  const Hook& hook_;
  bool keep_trace_;
  std::vector<SublayerIO>& trace_;
  std::vector<double> skip_scale_;
  std::vector<bool> skipped_;
  std::size_t executed_ = 0;
};

PrefillResult prefill(const Weights& weights, const ModelConfig& config,
                      std::span<const Token> tokens, const SkipSet& skip, const ScaleMap& scales,
                      const Hook& hook, bool keep_trace) {
  if (tokens.empty()) fail(ErrorKind::Input, "prefill: empty prompt");
  if (tokens.size() > config.max_seq_len) {
    fail(ErrorKind::Input, "prompt of " + std::to_string(tokens.size()) +
                               " tokens exceeds max_seq_len " + std::to_string(config.max_seq_len));
  }
  PrefillResult result;
  Forward fwd(weights, config, skip, scales, hook, keep_trace, result.trace);
  fwd.check_tokens(tokens);
  result.kv = KvCache(config.num_layers, config.hidden_dim);

  Matrix h = fwd.embed(tokens);
  fwd.run_layers(h, Phase::Prefill, 0, result.kv);
  Forward::advance(result.kv, tokens.size(), true);
  result.logits = output_logits(weights, config, h.row(h.rows() - 1));
  result.executed = fwd.executed();
  return result;
}

StepResult decode_step(const Weights& weights, const ModelConfig& config, KvCache& kv, Token token,
                       const SkipSet& skip, const ScaleMap& scales, const Hook& hook,
                       bool keep_trace) {
  if (kv.num_layers() != config.num_layers) {
    fail(ErrorKind::ContractViolation, "decode_step: KV cache does not match the model");
  }
  if (kv.position() + 1 > config.max_seq_len) {
    fail(ErrorKind::Input, "decode would exceed max_seq_len " + std::to_string(config.max_seq_len));
  }
  StepResult result;
  Forward fwd(weights, config, skip, scales, hook, keep_trace, result.trace);
  const Token one[] = {token};
  fwd.check_tokens(one);
  fwd.check_kv(kv);

  Matrix h = fwd.embed(one);
  fwd.run_layers(h, Phase::Decode, kv.decode_steps(), kv);
  Forward::advance(kv, 1, false);
  result.logits = output_logits(weights, config, h.row(0));
  result.executed = fwd.executed();
  return result;
}

GenerateResult generate(const Weights& weights, const ModelConfig& config,
                        std::span<const Token> prompt, const GenerateOptions& options,
                        const PlanResolver& plan_resolver, const Hook& hook) {
  using Clock = std::chrono::steady_clock;
  const std::size_t n = options.max_new_tokens;
  const std::size_t steps = n == 0 ? 0 : n - 1;
  if (prompt.size() + steps > config.max_seq_len) {
    fail(ErrorKind::Input, "prompt plus generation exceeds max_seq_len " +
                               std::to_string(config.max_seq_len));
  }
  if (options.forced && options.forced->size() < steps) {
    fail(ErrorKind::ContractViolation, "teacher-forced sequence shorter than the decode length");
  }
  auto resolve = [&](Phase phase, std::size_t step) {
    return plan_resolver ? plan_resolver(phase, step) : StepPlan{};
  };

  GenerateResult out;
  out.prompt_len = prompt.size();

  const StepPlan first = resolve(Phase::Prefill, 0);
  const auto t0 = Clock::now();
  PrefillResult pre = prefill(weights, config, prompt, first.skip, first.scales, hook);
  out.ttft_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  out.prefill_executed = pre.executed;
  out.kv_entries_after_prefill = pre.kv.total_entries();
  const Token first_token = argmax(pre.logits);
  if (options.keep_logits) out.logits.push_back(std::move(pre.logits));
  if (n == 0) return out;

  out.tokens.push_back(first_token);
  KvCache kv = std::move(pre.kv);

  for (std::size_t step = 0; step < steps; ++step) {
    const StepPlan plan = resolve(Phase::Decode, step);
    const Token input = options.forced ? (*options.forced)[step] : out.tokens.back();
    const auto ts = Clock::now();
    StepResult r = decode_step(weights, config, kv, input, plan.skip, plan.scales, hook);
    out.decode_seconds.push_back(std::chrono::duration<double>(Clock::now() - ts).count());
    out.decode_executed.push_back(r.executed);
    out.tokens.push_back(argmax(r.logits));
    if (options.keep_logits) out.logits.push_back(std::move(r.logits));
  }
  return out;
}

}  // namespace adaskip::model
