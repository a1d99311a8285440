#pragma once

#include <hexpert/nn/tape.hpp>

#include <cstddef>
#include <span>
#include <vector>

// Differentiable operations on tape variables. Every function records exactly
// one node and throws DimensionError on incompatible operand shapes.
namespace hexpert::nn {

// [n,k] x [k,m] -> [n,m]
Var matmul(Var a, Var b);
// x·W + b with x [n,in], W [in,out], b [out].
Var affine(Var x, Var weights, Var bias);
// [n,m] + [m], bias broadcast over rows.
Var add_bias(Var a, Var bias);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var add_scalar(Var a, double c);
Var neg(Var a);

Var tanh(Var a);
Var sigmoid(Var a);
Var relu(Var a);
Var leaky_relu(Var a, double slope = 0.01);
Var exp(Var a);
Var log(Var a);
Var square(Var a);
/// log(1 + e^x), computed stably.
Var softplus(Var a);

/// Sum of all elements, shape {1}.
Var sum(Var a);
Var mean(Var a);
/// Row sums: [n,m] -> [n].
Var sum_rows(Var a);

Var softmax_rows(Var a);
Var log_softmax_rows(Var a);
/// out[i] = a[i, index[i]].
Var pick(Var a, std::span<const std::size_t> index);

Var reshape(Var a, Shape shape);
/// Columns [begin, end) of a 2-D variable.
Var slice_cols(Var a, std::size_t begin, std::size_t end);
Var concat_cols(std::span<const Var> parts);
/// Stop-gradient: same value, recorded as a constant.
Var detach(Var a);

/// Elementwise Huber penalty of (a - target): 0.5 e^2 for |e| <= delta,
/// delta (|e| - 0.5 delta) otherwise.
Var huber(Var a, const Tensor& target, double delta = 1.0);

/// Valid (unpadded) 2-D convolution over NHWC input.
/// input [n,h,w,cin], filters [k,k,cin,cout], bias [cout].
Var conv2d(Var input, Var filters, Var bias, std::size_t stride);
/// Nearest-neighbour resize of an NHWC tensor.
Var resize_nearest(Var input, std::size_t out_h, std::size_t out_w);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator-(Var a) { return neg(a); }

} // namespace hexpert::nn
