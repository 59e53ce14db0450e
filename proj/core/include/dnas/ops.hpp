#pragma once

#include <vector>

#include "dnas/tensor.hpp"

namespace dnas {

// ---- elementwise / structural --------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor mul_scalar(const Tensor& a, float s);
Tensor relu(const Tensor& x);
Tensor concat(const std::vector<Tensor>& ts, int64_t axis);
Tensor softmax(const Tensor& x, int64_t axis);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// out = sum_m weights[m] * xs[m]; weights is a 1-D tensor of length xs.size().
// Gradients flow to both the operands and the weights.
Tensor weighted_sum(const std::vector<Tensor>& xs, const Tensor& weights);

// ---- convolution -----------------------------------------------------------

// input [B,Cin,H,W], weight [Cout,Cin/g,kh,kw], square kernels, no bias.
Tensor conv2d(const Tensor& input, const Tensor& weight, int stride, int padding, int groups);
// input [B,Cin,T,H,W], weight [Cout,Cin/g,kt,kh,kw], cubic kernels, no bias.
Tensor conv3d(const Tensor& input, const Tensor& weight, int stride, int padding, int groups);

// ---- pooling ---------------------------------------------------------------

Tensor max_pool2d(const Tensor& x, int window, int stride);
Tensor avg_pool2d(const Tensor& x, int window, int stride);
Tensor max_pool3d(const Tensor& x, int window, int stride);
Tensor avg_pool3d(const Tensor& x, int window, int stride);
// [B,C,...spatial...] -> [B,C], reducing over all trailing dims.
Tensor global_avg_pool(const Tensor& x);
Tensor global_max_pool(const Tensor& x);

// ---- normalization ---------------------------------------------------------

// x is [B,C] or [B,C,...spatial...]. gamma/beta are length-C parameters.
// Train mode normalizes with batch statistics and updates the running
// buffers in place; eval mode normalizes with the running buffers.
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  Tensor& running_mean, Tensor& running_var,
                  bool train, float eps = 1e-5f, float momentum = 0.1f);

// ---- dense -----------------------------------------------------------------

// input [B,Din], weight [Din,Dout], bias [Dout].
Tensor fully_connected(const Tensor& input, const Tensor& weight, const Tensor& bias);

}  // namespace dnas
