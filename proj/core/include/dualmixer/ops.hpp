#pragma once

#include <cstddef>

#include "dualmixer/graph.hpp"

// Differentiable operations recorded on a Graph. Every op validates shapes
// eagerly and throws DimensionError naming the offending shapes.
namespace dualmixer::numerics {

Var matmul(Var a, Var b);
Var transpose(Var a);
/// Per-block transpose of `blocks` stacked matrices: (blocks*r)xc -> (blocks*c)xr.
Var block_transpose(Var a, std::size_t blocks);
/// Row-major reinterpretation with the same element count.
Var reshape(Var a, std::size_t rows, std::size_t cols);
/// Rows [begin, begin+count).
Var slice_rows(Var a, std::size_t begin, std::size_t count);
/// Each row repeated `times` times consecutively.
Var repeat_rows(Var a, std::size_t times);
Var concat_cols(Var a, Var b);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var scale(Var a, double factor);

/// Exact GeLU x * Phi(x) with Phi the standard normal CDF.
Var gelu(Var a);
Var sigmoid(Var a);
/// Row-wise normalisation over the last axis followed by a per-column affine
/// map. `gain` and `bias` are 1 x cols.
Var layer_norm(Var a, Var gain, Var bias, double eps = 1e-5);

/// Cosine similarity between row r of a and row r of b, as a rows x 1 column.
Var row_cosine(Var a, Var b);
/// Cosine similarity of the two tensors flattened row-major; 1x1.
Var cosine_similarity(Var a, Var b);
/// Numerically stable log(sum(exp(row))) per row; rows x 1.
Var logsumexp_rows(Var a);

Var sum(Var a);
Var mean(Var a);

// Scalar kernels, exposed for tests.
double gelu_value(double x);
double gelu_derivative(double x);
double sigmoid_value(double x);

}  // namespace dualmixer::numerics
