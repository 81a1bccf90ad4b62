#include "adaskip/model_config.hpp"

#include <cmath>
#include <fstream>

#include "adaskip/error.hpp"

namespace adaskip::model {

void ModelConfig::validate() const {
  if (num_layers == 0 || hidden_dim == 0 || num_heads == 0 || ffn_dim == 0 || vocab_size == 0 ||
      max_seq_len == 0) {
    fail(ErrorKind::Config, "all model dimensions must be >= 1");
  }
  if (hidden_dim % num_heads != 0) {
    fail(ErrorKind::Config, "hidden_dim " + std::to_string(hidden_dim) +
                                " is not divisible by num_heads " + std::to_string(num_heads));
  }
  if (!(norm_eps > 0.0) || !std::isfinite(norm_eps)) {
    fail(ErrorKind::Config, "norm_eps must be a positive finite number");
  }
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"num_layers", c.num_layers}, {"hidden_dim", c.hidden_dim},
                     {"num_heads", c.num_heads},   {"ffn_dim", c.ffn_dim},
                     {"vocab_size", c.vocab_size}, {"max_seq_len", c.max_seq_len},
                     {"norm_eps", c.norm_eps}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  ModelConfig d;
  c.num_layers = j.value("num_layers", d.num_layers);
  c.hidden_dim = j.value("hidden_dim", d.hidden_dim);
  c.num_heads = j.value("num_heads", d.num_heads);
  c.ffn_dim = j.value("ffn_dim", d.ffn_dim);
  c.vocab_size = j.value("vocab_size", d.vocab_size);
  c.max_seq_len = j.value("max_seq_len", d.max_seq_len);
  c.norm_eps = j.value("norm_eps", d.norm_eps);
}

ModelConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open config " + path.string());
  ModelConfig c;
  try {
    c = nlohmann::json::parse(in).get<ModelConfig>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, path.string() + ": " + e.what());
  }
  c.validate();
  return c;
}

}  // namespace adaskip::model
