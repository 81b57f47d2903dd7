#include "dualmixer/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "dualmixer/error.hpp"

namespace dualmixer::numerics {

namespace {

Graph& graph_of(Var a) {
  if (a.graph == nullptr) throw ContractError("operation on an unbound Var");
  return *a.graph;
}

Graph& graph_of(Var a, Var b) {
  if (a.graph != b.graph) throw ContractError("operands recorded on different graphs");
  return graph_of(a);
}

template <typename F>
Tensor map(const Tensor& a, F f) {
  Tensor out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

}  // namespace

double gelu_value(double x) { return 0.5 * x * std::erfc(-x / std::numbers::sqrt2); }

double gelu_derivative(double x) {
  const double cdf = 0.5 * std::erfc(-x / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

double sigmoid_value(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Var matmul(Var a, Var b) {
  Graph& g = graph_of(a, b);
  return g.record(numerics::matmul(a.value(), b.value()), {a, b}, [](const BackwardContext& c) {
    if (c.input_grads[0]) add_inplace(*c.input_grads[0], matmul_nt(c.grad, *c.inputs[1]));
    if (c.input_grads[1]) add_inplace(*c.input_grads[1], matmul_tn(*c.inputs[0], c.grad));
  });
}

Var transpose(Var a) {
  Graph& g = graph_of(a);
  return g.record(numerics::transpose(a.value()), {a}, [](const BackwardContext& c) {
    add_inplace(*c.input_grads[0], numerics::transpose(c.grad));
  });
}

Var block_transpose(Var a, std::size_t blocks) {
  Graph& g = graph_of(a);
  return g.record(numerics::block_transpose(a.value(), blocks), {a},
                  [blocks](const BackwardContext& c) {
                    add_inplace(*c.input_grads[0], numerics::block_transpose(c.grad, blocks));
                  });
}

Var reshape(Var a, std::size_t rows, std::size_t cols) {
  Graph& g = graph_of(a);
  const std::size_t in_rows = a.rows();
  const std::size_t in_cols = a.cols();
  return g.record(a.value().reshaped(rows, cols), {a},
                  [in_rows, in_cols](const BackwardContext& c) {
                    add_inplace(*c.input_grads[0], c.grad.reshaped(in_rows, in_cols));
                  });
}

Var slice_rows(Var a, std::size_t begin, std::size_t count) {
  Graph& g = graph_of(a);
  const Tensor& in = a.value();
  if (begin + count > in.rows()) {
    throw DimensionError("slice_rows [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of range for " +
                         in.shape_string());
  }
  const std::size_t cols = in.cols();
  std::vector<double> data(in.values().begin() + static_cast<std::ptrdiff_t>(begin * cols),
                           in.values().begin() + static_cast<std::ptrdiff_t>((begin + count) * cols));
  return g.record(Tensor(count, cols, std::move(data)), {a},
                  [begin, cols](const BackwardContext& c) {
                    auto dst = c.input_grads[0]->values().subspan(begin * cols, c.grad.size());
                    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += c.grad[i];
                  });
}

Var repeat_rows(Var a, std::size_t times) {
  Graph& g = graph_of(a);
  const Tensor& in = a.value();
  if (times == 0) throw DimensionError("repeat_rows with zero repetitions");
  Tensor out(in.rows() * times, in.cols());
  for (std::size_t r = 0; r < in.rows(); ++r)
    for (std::size_t k = 0; k < times; ++k)
      std::copy(in.row(r).begin(), in.row(r).end(), out.row(r * times + k).begin());
  return g.record(std::move(out), {a}, [times](const BackwardContext& c) {
    Tensor& dst = *c.input_grads[0];
    for (std::size_t r = 0; r < dst.rows(); ++r)
      for (std::size_t k = 0; k < times; ++k) {
        auto src = c.grad.row(r * times + k);
        auto d = dst.row(r);
        for (std::size_t j = 0; j < d.size(); ++j) d[j] += src[j];
      }
  });
}

Var concat_cols(Var a, Var b) {
  Graph& g = graph_of(a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.rows() != y.rows()) {
    throw DimensionError("concat_cols row mismatch: " + x.shape_string() + " and " +
                         y.shape_string());
  }
  Tensor out(x.rows(), x.cols() + y.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    std::copy(x.row(r).begin(), x.row(r).end(), out.row(r).begin());
    std::copy(y.row(r).begin(), y.row(r).end(), out.row(r).begin() + static_cast<std::ptrdiff_t>(x.cols()));
  }
  const std::size_t split = x.cols();
  return g.record(std::move(out), {a, b}, [split](const BackwardContext& c) {
    for (std::size_t r = 0; r < c.grad.rows(); ++r) {
      auto src = c.grad.row(r);
      if (c.input_grads[0]) {
        auto d = c.input_grads[0]->row(r);
        for (std::size_t j = 0; j < d.size(); ++j) d[j] += src[j];
      }
      if (c.input_grads[1]) {
        auto d = c.input_grads[1]->row(r);
        for (std::size_t j = 0; j < d.size(); ++j) d[j] += src[split + j];
      }
    }
  });
}

Var add(Var a, Var b) {
  Graph& g = graph_of(a, b);
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  add_inplace(out, b.value());
  return g.record(std::move(out), {a, b}, [](const BackwardContext& c) {
    if (c.input_grads[0]) add_inplace(*c.input_grads[0], c.grad);
    if (c.input_grads[1]) add_inplace(*c.input_grads[1], c.grad);
  });
}

Var sub(Var a, Var b) {
  Graph& g = graph_of(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return g.record(std::move(out), {a, b}, [](const BackwardContext& c) {
    if (c.input_grads[0]) add_inplace(*c.input_grads[0], c.grad);
    if (Tensor* gb = c.input_grads[1]) {
      for (std::size_t i = 0; i < gb->size(); ++i) (*gb)[i] -= c.grad[i];
    }
  });
}

Var hadamard(Var a, Var b) {
  Graph& g = graph_of(a, b);
  require_same_shape(a.value(), b.value(), "hadamard");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return g.record(std::move(out), {a, b}, [](const BackwardContext& c) {
    if (Tensor* ga = c.input_grads[0]) {
      for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += c.grad[i] * (*c.inputs[1])[i];
    }
    if (Tensor* gb = c.input_grads[1]) {
      for (std::size_t i = 0; i < gb->size(); ++i) (*gb)[i] += c.grad[i] * (*c.inputs[0])[i];
    }
  });
}

Var scale(Var a, double factor) {
  Graph& g = graph_of(a);
  return g.record(map(a.value(), [factor](double x) { return x * factor; }), {a},
                  [factor](const BackwardContext& c) {
                    Tensor& ga = *c.input_grads[0];
                    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += c.grad[i] * factor;
                  });
}

Var gelu(Var a) {
  Graph& g = graph_of(a);
  return g.record(map(a.value(), gelu_value), {a}, [](const BackwardContext& c) {
    Tensor& ga = *c.input_grads[0];
    const Tensor& x = *c.inputs[0];
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += c.grad[i] * gelu_derivative(x[i]);
  });
}

Var sigmoid(Var a) {
  Graph& g = graph_of(a);
  return g.record(map(a.value(), sigmoid_value), {a}, [](const BackwardContext& c) {
    Tensor& ga = *c.input_grads[0];
    for (std::size_t i = 0; i < ga.size(); ++i) {
      const double s = c.output[i];
      ga[i] += c.grad[i] * s * (1.0 - s);
    }
  });
}

Var layer_norm(Var a, Var gain, Var bias, double eps) {
  Graph& g = graph_of(a, gain);
  graph_of(a, bias);
  const Tensor& x = a.value();
  const std::size_t rows = x.rows();
  const std::size_t cols = x.cols();
  if (gain.rows() != 1 || gain.cols() != cols || bias.rows() != 1 || bias.cols() != cols) {
    throw DimensionError("layer_norm affine shape mismatch: input " + x.shape_string() +
                         ", gain " + gain.value().shape_string() + ", bias " +
                         bias.value().shape_string());
  }
  // Normalised activations and inverse std are kept for the backward rule.
  Tensor normalized(rows, cols);
  std::vector<double> inv_std(rows);
  Tensor out(rows, cols);
  const Tensor& gv = gain.value();
  const Tensor& bv = bias.value();
  for (std::size_t r = 0; r < rows; ++r) {
    auto in = x.row(r);
    double mu = 0.0;
    for (double v : in) mu += v;
    mu /= static_cast<double>(cols);
    double var = 0.0;
    for (double v : in) var += (v - mu) * (v - mu);
    var /= static_cast<double>(cols);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < cols; ++j) {
      normalized(r, j) = (in[j] - mu) * inv_std[r];
      out(r, j) = normalized(r, j) * gv[j] + bv[j];
    }
  }
  return g.record(
      std::move(out), {a, gain, bias},
      [normalized = std::move(normalized), inv_std = std::move(inv_std)](const BackwardContext& c) {
        const std::size_t rows = normalized.rows();
        const std::size_t cols = normalized.cols();
        const Tensor& gv = *c.inputs[1];
        if (Tensor* gg = c.input_grads[1]) {
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < cols; ++j) (*gg)[j] += c.grad(r, j) * normalized(r, j);
        }
        if (Tensor* gb = c.input_grads[2]) {
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < cols; ++j) (*gb)[j] += c.grad(r, j);
        }
        if (Tensor* gx = c.input_grads[0]) {
          const double n = static_cast<double>(cols);
          for (std::size_t r = 0; r < rows; ++r) {
            double mean_dn = 0.0;
            double mean_dn_n = 0.0;
            for (std::size_t j = 0; j < cols; ++j) {
              const double dn = c.grad(r, j) * gv[j];
              mean_dn += dn;
              mean_dn_n += dn * normalized(r, j);
            }
            mean_dn /= n;
            mean_dn_n /= n;
            for (std::size_t j = 0; j < cols; ++j) {
              const double dn = c.grad(r, j) * gv[j];
              (*gx)(r, j) += inv_std[r] * (dn - mean_dn - normalized(r, j) * mean_dn_n);
            }
          }
        }
      });
}

Var row_cosine(Var a, Var b) {
  Graph& g = graph_of(a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  require_same_shape(x, y, "row_cosine");
  const std::size_t rows = x.rows();
  std::vector<double> norm_x(rows), norm_y(rows);
  Tensor out(rows, 1);
  for (std::size_t r = 0; r < rows; ++r) {
    double dot = 0.0, xx = 0.0, yy = 0.0;
    auto xr = x.row(r);
    auto yr = y.row(r);
    for (std::size_t j = 0; j < xr.size(); ++j) {
      dot += xr[j] * yr[j];
      xx += xr[j] * xr[j];
      yy += yr[j] * yr[j];
    }
    if (xx == 0.0 || yy == 0.0) {
      throw DegenerateVectorError("cosine similarity of a zero-norm vector (row " +
                                  std::to_string(r) + ")");
    }
    norm_x[r] = std::sqrt(xx);
    norm_y[r] = std::sqrt(yy);
    out(r, 0) = dot / (norm_x[r] * norm_y[r]);
  }
  return g.record(std::move(out), {a, b},
                  [norm_x = std::move(norm_x), norm_y = std::move(norm_y)](const BackwardContext& c) {
                    const Tensor& x = *c.inputs[0];
                    const Tensor& y = *c.inputs[1];
                    for (std::size_t r = 0; r < x.rows(); ++r) {
                      const double up = c.grad(r, 0);
                      const double s = c.output(r, 0);
                      const double inv = 1.0 / (norm_x[r] * norm_y[r]);
                      auto xr = x.row(r);
                      auto yr = y.row(r);
                      if (c.input_grads[0]) {
                        auto d = c.input_grads[0]->row(r);
                        const double k = s / (norm_x[r] * norm_x[r]);
                        for (std::size_t j = 0; j < d.size(); ++j) d[j] += up * (yr[j] * inv - k * xr[j]);
                      }
                      if (c.input_grads[1]) {
                        auto d = c.input_grads[1]->row(r);
                        const double k = s / (norm_y[r] * norm_y[r]);
                        for (std::size_t j = 0; j < d.size(); ++j) d[j] += up * (xr[j] * inv - k * yr[j]);
                      }
                    }
                  });
}

Var cosine_similarity(Var a, Var b) {
  return row_cosine(reshape(a, 1, a.value().size()), reshape(b, 1, b.value().size()));
}

Var logsumexp_rows(Var a) {
  Graph& g = graph_of(a);
  const Tensor& x = a.value();
  if (x.cols() == 0) throw DimensionError("logsumexp_rows on a tensor with no columns");
  Tensor out(x.rows(), 1);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    const double hi = *std::max_element(row.begin(), row.end());
    double acc = 0.0;
    for (double v : row) acc += std::exp(v - hi);
    out(r, 0) = hi + std::log(acc);
  }
  return g.record(std::move(out), {a}, [](const BackwardContext& c) {
    const Tensor& x = *c.inputs[0];
    Tensor& gx = *c.input_grads[0];
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const double lse = c.output(r, 0);
      const double up = c.grad(r, 0);
      for (std::size_t j = 0; j < x.cols(); ++j) gx(r, j) += up * std::exp(x(r, j) - lse);
    }
  });
}

Var sum(Var a) {
  Graph& g = graph_of(a);
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return g.record(Tensor::scalar(s), {a}, [](const BackwardContext& c) {
    const double up = c.grad[0];
    for (double& v : c.input_grads[0]->values()) v += up;
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw DimensionError("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

}  // namespace dualmixer::numerics
