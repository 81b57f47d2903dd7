#include "dualmixer/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "dualmixer/error.hpp"

namespace dualmixer::numerics {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

ConstMap view(const Tensor& t) {
  return ConstMap(t.values().data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}

MutMap view(Tensor& t) {
  return MutMap(t.values().data(), static_cast<Eigen::Index>(t.rows()),
                static_cast<Eigen::Index>(t.cols()));
}

std::string shapes(const Tensor& a, const Tensor& b) {
  return a.shape_string() + " and " + b.shape_string();
}

}  // namespace

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_string());
  }
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged row in Tensor::from_rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor(r, c, std::move(data));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t(n, n);
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

double Tensor::item() const {
  if (rows_ != 1 || cols_ != 1) throw DimensionError("item() on non-scalar tensor " + shape_string());
  return data_[0];
}

std::string Tensor::shape_string() const {
  std::ostringstream os;
  os << rows_ << "x" << cols_;
  return os.str();
}

Tensor Tensor::reshaped(std::size_t rows, std::size_t cols) const {
  if (rows * cols != size()) {
    throw DimensionError("cannot reshape " + shape_string() + " to " + std::to_string(rows) + "x" +
                         std::to_string(cols));
  }
  return Tensor(rows, cols, data_);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

bool operator==(const Tensor& a, const Tensor& b) noexcept {
  return a.rows_ == b.rows_ && a.cols_ == b.cols_ &&
         (a.data_.empty() ||
          std::memcmp(a.data_.data(), b.data_.data(), a.data_.size() * sizeof(double)) == 0);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) throw DimensionError("matmul shape mismatch: " + shapes(a, b));
  Tensor out(a.rows(), b.cols());
  if (a.cols() == 0) return out;
  view(out).noalias() = view(a) * view(b);
  return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) throw DimensionError("matmul_tn shape mismatch: " + shapes(a, b));
  Tensor out(a.cols(), b.cols());
  if (a.rows() == 0) return out;
  view(out).noalias() = view(a).transpose() * view(b);
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) throw DimensionError("matmul_nt shape mismatch: " + shapes(a, b));
  Tensor out(a.rows(), b.rows());
  if (a.cols() == 0) return out;
  view(out).noalias() = view(a) * view(b).transpose();
  return out;
}

Tensor transpose(const Tensor& a) {
  Tensor out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

Tensor block_transpose(const Tensor& a, std::size_t blocks) {
  if (blocks == 0 || a.rows() % blocks != 0) {
    throw DimensionError("block_transpose: " + a.shape_string() + " not divisible into " +
                         std::to_string(blocks) + " row blocks");
  }
  const std::size_t r = a.rows() / blocks;
  const std::size_t c = a.cols();
  Tensor out(blocks * c, r);
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t in0 = b * r;
    const std::size_t out0 = b * c;
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) out(out0 + j, i) = a(in0 + i, j);
  }
  return out;
}

void add_inplace(Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add_inplace");
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) av[i] += bv[i];
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + " shape mismatch: " + shapes(a, b));
  }
}

}  // namespace dualmixer::numerics
