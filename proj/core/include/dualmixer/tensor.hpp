#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace dualmixer::numerics {

/// Dense row-major matrix of doubles. The only numeric carrier in the library.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0);
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor zeros(std::size_t rows, std::size_t cols) { return Tensor(rows, cols, 0.0); }
  static Tensor ones(std::size_t rows, std::size_t cols) { return Tensor(rows, cols, 1.0); }
  static Tensor identity(std::size_t n);
  static Tensor scalar(double v) { return Tensor(1, 1, v); }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  /// Value of a 1x1 tensor.
  double item() const;

  bool same_shape(const Tensor& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  std::string shape_string() const;

  /// Same data viewed with a different shape; element count must match.
  Tensor reshaped(std::size_t rows, std::size_t cols) const;

  void fill(double v);
  bool all_finite() const noexcept;

  /// Bitwise equality of shape and contents.
  friend bool operator==(const Tensor& a, const Tensor& b) noexcept;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Eager (untaped) kernels shared by the tape ops.
Tensor matmul(const Tensor& a, const Tensor& b);
/// a^T * b without materialising the transpose.
Tensor matmul_tn(const Tensor& a, const Tensor& b);
/// a * b^T without materialising the transpose.
Tensor matmul_nt(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
/// Treats `a` as `blocks` stacked r x c matrices and transposes each block.
Tensor block_transpose(const Tensor& a, std::size_t blocks);

/// a += b elementwise; shapes must match.
void add_inplace(Tensor& a, const Tensor& b);
double max_abs_diff(const Tensor& a, const Tensor& b);

void require_same_shape(const Tensor& a, const Tensor& b, const char* op);

}  // namespace dualmixer::numerics
