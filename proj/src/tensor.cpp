#include "adaskip/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "adaskip/error.hpp"

namespace adaskip::tensor {

namespace {

void require_same_length(std::span<const double> a, std::span<const double> b, const char* op) {
  if (a.size() != b.size()) {
    fail(ErrorKind::ContractViolation, std::string(op) + ": length mismatch (" +
                                           std::to_string(a.size()) + " vs " +
                                           std::to_string(b.size()) + ")");
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    fail(ErrorKind::ContractViolation, "matrix data length " + std::to_string(data_.size()) +
                                           " != " + std::to_string(rows_) + "x" +
                                           std::to_string(cols_));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  require_same_length(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double l2_norm(std::span<const double> a) {
  double acc = 0.0;
  for (double v : a) acc += v * v;
  return std::sqrt(acc);
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  require_same_length(a, b, "cosine_similarity");
  if (a.empty()) fail(ErrorKind::ContractViolation, "cosine_similarity: empty vectors");
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) {
    fail(ErrorKind::DegenerateInput, "cosine_similarity: zero-norm vector");
  }
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

Vector scale_vector(std::span<const double> a, double s) {
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = s * a[i];
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    fail(ErrorKind::ContractViolation, "matmul: inner dimensions " + std::to_string(a.cols()) +
                                           " and " + std::to_string(b.rows()) + " differ");
  }
  Matrix out(a.rows(), b.cols());
  // i-k-j order keeps the inner loop contiguous in both b and out.
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto dst = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      const auto src = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) dst[j] += aik * src[j];
    }
  }
  return out;
}

Vector matvec(std::span<const double> x, const Matrix& w) {
  if (x.size() != w.rows()) {
    fail(ErrorKind::ContractViolation, "matvec: input length " + std::to_string(x.size()) +
                                           " != rows " + std::to_string(w.rows()));
  }
  Vector out(w.cols(), 0.0);
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double xk = x[k];
    const auto src = w.row(k);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += xk * src[j];
  }
  return out;
}

Matrix softmax_rows(const Matrix& a) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto in = a.row(r);
    auto dst = out.row(r);
    const double peak = *std::max_element(in.begin(), in.end());
    if (peak == -std::numeric_limits<double>::infinity()) {
      fail(ErrorKind::ContractViolation, "softmax_rows: row fully masked");
    }
    double total = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      dst[c] = std::exp(in[c] - peak);
      total += dst[c];
    }
    for (double& v : dst) v /= total;
  }
  return out;
}

Vector rms_norm(std::span<const double> a, std::span<const double> gain, double eps) {
  require_same_length(a, gain, "rms_norm");
  if (!(eps > 0.0)) fail(ErrorKind::ContractViolation, "rms_norm: eps must be positive");
  double sq = 0.0;
  for (double v : a) sq += v * v;
  const double inv = 1.0 / std::sqrt(sq / static_cast<double>(a.size()) + eps);
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = gain[i] * (a[i] * inv);
  return out;
}

double silu(double x) { return x / (1.0 + std::exp(-x)); }

bool all_finite(std::span<const double> a) {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace adaskip::tensor
