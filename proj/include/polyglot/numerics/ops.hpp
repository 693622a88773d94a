#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "polyglot/numerics/tensor.hpp"

// Differentiable operations. Binary elementwise ops require identical shapes;
// broadcasting is explicit (add_rowvec, mul_rowvec, broadcast_rows).
namespace polyglot::nn {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, Real s);
Tensor add_scalar(const Tensor& a, Real s);
Tensor square(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor gelu(const Tensor& a);
Tensor tanh(const Tensor& a);

/// Elementwise op from a value function and its derivative.
Tensor map_unary(const Tensor& a, const std::function<Real(Real)>& f, const std::function<Real(Real)>& df);

/// [m,k] x [k,n] -> [m,n]
Tensor matmul(const Tensor& a, const Tensor& b);
/// [m,k] x [n,k]^T -> [m,n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

/// [m,n] + [n] applied to every row.
Tensor add_rowvec(const Tensor& a, const Tensor& v);
/// [m,n] * [n] applied to every row.
Tensor mul_rowvec(const Tensor& a, const Tensor& v);
/// [n] -> [m,n]
Tensor broadcast_rows(const Tensor& v, std::size_t m);

/// Row-wise softmax. A non-empty mask (row-major, same shape) marks permitted
/// entries with 1; blocked logits behave as -inf. Every row needs one permitted entry.
Tensor softmax_rows(const Tensor& a, std::span<const std::uint8_t> mask = {});
/// Row-wise normalization to zero mean and unit variance, no affine part.
Tensor layer_norm_rows(const Tensor& a, Real eps = Real{1e-5});

Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);
/// Concatenates 1-D tensors.
Tensor concat(const std::vector<Tensor>& parts);

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end);
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end);
Tensor gather_cols(const Tensor& a, std::span<const std::size_t> ids);
/// Embedding lookup: rows of `table` selected by `ids`.
Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids);
Tensor reshape(const Tensor& a, Shape shape);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// Column means of a [m,n] matrix -> [n].
Tensor mean_rows(const Tensor& a);

/// mean((a - b)^2)
Tensor mse(const Tensor& a, const Tensor& b);

}  // namespace polyglot::nn
