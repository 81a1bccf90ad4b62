#include "adaskip/weights.hpp"

#include <bit>
#include <cmath>
#include <random>

#include <json.hpp>

#include "adaskip/digest.hpp"
#include "adaskip/error.hpp"
#include "adaskip/fileio.hpp"

namespace adaskip::model {

namespace {

using tensor::Matrix;
using tensor::Vector;

constexpr std::string_view kMagic = "ADSK";
constexpr std::size_t kPreambleBytes = 4 + 4 + 8;

double to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

class UniformDraw {
 public:
  UniformDraw(std::uint64_t seed, double bound) : gen_(seed), bound_(bound) {}

  double operator()() {
    const double u = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    return to_f32((2.0 * u - 1.0) * bound_);
  }

 private:
  std::mt19937_64 gen_;
  double bound_;
};

Matrix random_matrix(std::size_t rows, std::size_t cols, UniformDraw& draw) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = draw();
  return m;
}

// Canonical tensor order; shared by the encoder and the shape checker.
struct TensorView {
  std::string name;
  std::vector<std::size_t> shape;
  std::span<const double> values;
};

std::vector<TensorView> tensor_views(const Weights& w) {
  std::vector<TensorView> out;
  auto mat = [&](std::string name, const Matrix& m) {
    out.push_back({std::move(name), {m.rows(), m.cols()}, m.data()});
  };
  auto vec = [&](std::string name, const Vector& v) {
    out.push_back({std::move(name), {v.size()}, v});
  };
  mat("tok_embeddings", w.embedding);
  for (std::size_t i = 0; i < w.layers.size(); ++i) {
    const auto& l = w.layers[i];
    const std::string p = "layers." + std::to_string(i) + ".";
    vec(p + "attn_norm", l.attn_norm);
    mat(p + "wq", l.wq);
    mat(p + "wk", l.wk);
    mat(p + "wv", l.wv);
    mat(p + "wo", l.wo);
    vec(p + "ffn_norm", l.ffn_norm);
    mat(p + "w_up", l.w_up);
    mat(p + "w_down", l.w_down);
  }
  vec("final_norm", w.final_norm);
  return out;
}

// Empty-but-shaped weights for config; decode fills them in place.
Weights shaped(const ModelConfig& c) {
  Weights w;
  const std::size_t d = c.hidden_dim;
  w.embedding = Matrix(c.vocab_size, d);
  w.layers.resize(c.num_layers);
  for (auto& l : w.layers) {
    l.attn_norm.assign(d, 1.0);
    l.wq = Matrix(d, d);
    l.wk = Matrix(d, d);
    l.wv = Matrix(d, d);
    l.wo = Matrix(d, d);
    l.ffn_norm.assign(d, 1.0);
    l.w_up = Matrix(d, c.ffn_dim);
    l.w_down = Matrix(c.ffn_dim, d);
  }
  w.final_norm.assign(d, 1.0);
  return w;
}

std::vector<std::span<double>> mutable_spans(Weights& w) {
  std::vector<std::span<double>> out;
  out.push_back(w.embedding.data());
  for (auto& l : w.layers) {
    out.push_back(l.attn_norm);
    out.push_back(l.wq.data());
    out.push_back(l.wk.data());
    out.push_back(l.wv.data());
    out.push_back(l.wo.data());
    out.push_back(l.ffn_norm);
    out.push_back(l.w_up.data());
    out.push_back(l.w_down.data());
  }
  out.push_back(w.final_norm);
  return out;
}

template <typename T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
  }
}

template <typename T>
T get_le(std::string_view bytes, std::size_t at) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<T>(static_cast<unsigned char>(bytes[at + i])) << (8 * i);
  }
  return v;
}

}  // namespace

Weights init_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  const std::size_t d = config.hidden_dim;
  UniformDraw draw(seed, 1.0 / std::sqrt(static_cast<double>(d)));
  Weights w = shaped(config);
  w.embedding = random_matrix(config.vocab_size, d, draw);
  for (auto& l : w.layers) {
    l.wq = random_matrix(d, d, draw);
    l.wk = random_matrix(d, d, draw);
    l.wv = random_matrix(d, d, draw);
    l.wo = random_matrix(d, d, draw);
    l.w_up = random_matrix(d, config.ffn_dim, draw);
    l.w_down = random_matrix(config.ffn_dim, d, draw);
  }
  return w;
}

void plant_identity(Weights& weights, const SublayerRef& sublayer, double gain) {
  if (sublayer.layer >= weights.layers.size()) {
    fail(ErrorKind::Config, "cannot plant sublayer " + to_string(sublayer) + ": model has " +
                                std::to_string(weights.layers.size()) + " layers");
  }
  auto& l = weights.layers[sublayer.layer];
  auto& proj = sublayer.kind == SublayerKind::Attention ? l.wo : l.w_down;
  for (double& v : proj.data()) v = to_f32(v * gain);
}

void check_shapes(const Weights& weights, const ModelConfig& config) {
  const Weights expect = shaped(config);
  const auto want = tensor_views(expect);
  const auto have = tensor_views(weights);
  if (want.size() != have.size()) {
    fail(ErrorKind::Config, "weights have " + std::to_string(weights.layers.size()) +
                                " layers, config expects " + std::to_string(config.num_layers));
  }
  for (std::size_t i = 0; i < want.size(); ++i) {
    if (want[i].shape != have[i].shape) {
      fail(ErrorKind::Config, "tensor " + want[i].name + " has the wrong shape for this config");
    }
  }
}

std::string encode_weights(const Weights& weights) {
  const auto views = tensor_views(weights);
  nlohmann::json header = nlohmann::json::object();
  std::uint64_t offset = 0;
  for (const auto& v : views) {
    header[v.name] = {{"shape", v.shape}, {"dtype", "f32"}, {"offset", offset}};
    offset += 4 * v.values.size();
  }
  const std::string header_text = header.dump();

  std::string out;
  out.reserve(kPreambleBytes + header_text.size() + offset);
  out.append(kMagic);
  put_le<std::uint32_t>(out, kWeightFormatVersion);
  put_le<std::uint64_t>(out, header_text.size());
  out.append(header_text);
  for (const auto& v : views) {
    for (double x : v.values) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
  }
  return out;
}

Weights decode_weights(std::string_view bytes, const ModelConfig& config) {
  config.validate();
  if (bytes.size() < kPreambleBytes || bytes.substr(0, 4) != kMagic) {
    fail(ErrorKind::Parse, "weight file: bad magic");
  }
  const auto version = get_le<std::uint32_t>(bytes, 4);
  if (version != kWeightFormatVersion) {
    fail(ErrorKind::Parse, "weight file: unsupported version " + std::to_string(version));
  }
  const auto header_len = get_le<std::uint64_t>(bytes, 8);
  if (header_len > bytes.size() - kPreambleBytes) {
    fail(ErrorKind::Parse, "weight file: header length exceeds file size");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(kPreambleBytes, header_len));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, std::string("weight file header: ") + e.what());
  }
  const std::string_view payload = bytes.substr(kPreambleBytes + header_len);

  Weights w = shaped(config);
  const auto views = tensor_views(w);
  auto spans = mutable_spans(w);
  if (!header.is_object() || header.size() != views.size()) {
    fail(ErrorKind::Parse, "weight file: expected " + std::to_string(views.size()) + " tensors");
  }
  std::uint64_t expected_payload = 0;
  for (std::size_t i = 0; i < views.size(); ++i) {
    const auto& v = views[i];
    if (!header.contains(v.name)) fail(ErrorKind::Parse, "weight file: missing tensor " + v.name);
    const auto& entry = header[v.name];
    try {
      if (entry.at("dtype").get<std::string>() != "f32") {
        fail(ErrorKind::Parse, "weight file: tensor " + v.name + " is not f32");
      }
      if (entry.at("shape").get<std::vector<std::size_t>>() != v.shape) {
        fail(ErrorKind::Config, "weight file: tensor " + v.name + " shape disagrees with config");
      }
      const auto offset = entry.at("offset").get<std::uint64_t>();
      const std::uint64_t nbytes = 4 * v.values.size();
      if (offset > payload.size() || nbytes > payload.size() - offset) {
        fail(ErrorKind::Parse, "weight file: tensor " + v.name + " runs past end of payload");
      }
      for (std::size_t k = 0; k < v.values.size(); ++k) {
        const auto bits = get_le<std::uint32_t>(payload, offset + 4 * k);
        const double x = std::bit_cast<float>(bits);
        if (!std::isfinite(x)) fail(ErrorKind::Parse, "weight file: non-finite value in " + v.name);
        spans[i][k] = x;
      }
      expected_payload += nbytes;
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::Parse, "weight file: tensor " + v.name + ": " + e.what());
    }
  }
  if (payload.size() != expected_payload) {
    fail(ErrorKind::Parse, "weight file: total length " + std::to_string(bytes.size()) +
                               " does not match header (expected payload " +
                               std::to_string(expected_payload) + " bytes)");
  }
  return w;
}

void save_weights(const std::filesystem::path& path, const Weights& weights) {
  write_file_atomic(path, encode_weights(weights));
}

Weights load_weights(const std::filesystem::path& path, const ModelConfig& config) {
  return decode_weights(read_file(path), config);
}

std::string checksum(const Weights& weights) { return sha256_hex(encode_weights(weights)); }

std::string model_id(const Weights& weights) { return "adsk-" + checksum(weights).substr(0, 16); }

}  // namespace adaskip::model
