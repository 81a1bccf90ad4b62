#pragma once

// Dense 64-bit kernels shared by the runtime and the profiler. Everything
// here is a pure function of its arguments.

#include <cstddef>
#include <span>
#include <vector>

namespace adaskip::tensor {

using Vector = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);

double l2_norm(std::span<const double> a);

/// Cosine of the angle between a and b, clamped to [-1, 1].
/// Throws DegenerateInput when either vector has zero norm and
/// ContractViolation on a length mismatch or empty input.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

Vector scale_vector(std::span<const double> a, double s);

Matrix matmul(const Matrix& a, const Matrix& b);

/// Row vector times matrix: out[j] = sum_i x[i] * w(i, j).
Vector matvec(std::span<const double> x, const Matrix& w);

/// Row-wise numerically stable softmax. -inf entries map to exactly 0.
Matrix softmax_rows(const Matrix& a);

/// gain ⊙ a / sqrt(mean(a²) + eps)
Vector rms_norm(std::span<const double> a, std::span<const double> gain, double eps);

/// x * sigmoid(x)
double silu(double x);

bool all_finite(std::span<const double> a);

}  // namespace adaskip::tensor
