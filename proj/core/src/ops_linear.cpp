#include <Eigen/Dense>

#include "dnas/ops.hpp"

namespace dnas {

namespace {
using MatMap = Eigen::Map<Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
}  // namespace

Tensor fully_connected(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  check_input(input.ndim() == 2, "fully_connected: input must be [B,Din], got " + shape_str(input.shape()));
  check_input(weight.ndim() == 2, "fully_connected: weight must be [Din,Dout], got " + shape_str(weight.shape()));
  const int64_t B = input.dim(0), din = input.dim(1), dout = weight.dim(1);
  check_input(weight.dim(0) == din, "fully_connected: weight rows " + std::to_string(weight.dim(0)) +
                                        " != input features " + std::to_string(din));
  check_input(bias.ndim() == 1 && bias.dim(0) == dout,
              "fully_connected: bias length must equal output features " + std::to_string(dout));

  Tensor out = Tensor::zeros({B, dout});
  {
    ConstMatMap X(input.data().data(), B, din);
    ConstMatMap W(weight.data().data(), din, dout);
    MatMap Y(out.data().data(), B, dout);
    Y.noalias() = X * W;
    auto bd = bias.data();
    for (int64_t b = 0; b < B; ++b)
      for (int64_t j = 0; j < dout; ++j) out.data()[b * dout + j] += bd[j];
  }

  record_node("fully_connected", out, {input, weight, bias},
              [input, weight, bias, B, din, dout](std::span<const float> gy) mutable {
                ConstMatMap GY(gy.data(), B, dout);
                if (input.requires_grad()) {
                  std::vector<float> gx(static_cast<size_t>(B * din));
                  ConstMatMap W(weight.data().data(), din, dout);
                  MatMap GX(gx.data(), B, din);
                  GX.noalias() = GY * W.transpose();
                  accumulate_grad(*input.impl(), gx);
                }
                if (weight.requires_grad()) {
                  std::vector<float> gw(static_cast<size_t>(din * dout));
                  ConstMatMap X(input.data().data(), B, din);
                  MatMap GW(gw.data(), din, dout);
                  GW.noalias() = X.transpose() * GY;
                  accumulate_grad(*weight.impl(), gw);
                }
                if (bias.requires_grad()) {
                  std::vector<float> gb(static_cast<size_t>(dout));
                  for (int64_t j = 0; j < dout; ++j) {
                    double acc = 0.0;
                    for (int64_t b = 0; b < B; ++b) acc += gy[b * dout + j];
                    gb[static_cast<size_t>(j)] = static_cast<float>(acc);
                  }
                  accumulate_grad(*bias.impl(), gb);
                }
              });
  return out;
}

}  // namespace dnas
