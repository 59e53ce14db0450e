#include <cmath>

#include "dnas/ops.hpp"

namespace dnas {

// Normalizes over all dims except dim 1 (channels). Works for [B,C],
// [B,C,H,W] and [B,C,T,H,W] alike.
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  Tensor& running_mean, Tensor& running_var, bool train, float eps,
                  float momentum) {
  check_input(x.ndim() >= 2, "batch_norm: input must be [B,C,...], got " + shape_str(x.shape()));
  const int64_t B = x.dim(0);
  const int64_t C = x.dim(1);
  const int64_t spatial = x.numel() / (B * C);
  check_input(gamma.numel() == C && beta.numel() == C,
              "batch_norm: gamma/beta length must equal channel count " + std::to_string(C));
  check_input(running_mean.numel() == C && running_var.numel() == C,
              "batch_norm: running stats length must equal channel count " + std::to_string(C));
  check_input(eps > 0.0f, "batch_norm: eps must be positive");

  const int64_t n = B * spatial;
  Tensor out = Tensor::zeros(x.shape());
  auto xd = x.data();
  auto od = out.data();
  auto gd = gamma.data();
  auto bd = beta.data();

  auto mean_used = std::make_shared<std::vector<float>>(static_cast<size_t>(C));
  auto invstd_used = std::make_shared<std::vector<float>>(static_cast<size_t>(C));

  for (int64_t c = 0; c < C; ++c) {
    double m, v;
    if (train) {
      double s = 0.0, s2 = 0.0;
      for (int64_t b = 0; b < B; ++b) {
        const float* p = xd.data() + (b * C + c) * spatial;
        for (int64_t i = 0; i < spatial; ++i) {
          s += p[i];
          s2 += static_cast<double>(p[i]) * p[i];
        }
      }
      m = s / n;
      v = std::max(0.0, s2 / n - m * m);
      // Running stats follow the usual convention: biased variance for
      // normalization, unbiased for the running estimate.
      const double v_running = n > 1 ? v * n / (n - 1) : v;
      running_mean.data()[c] =
          static_cast<float>((1.0 - momentum) * running_mean.data()[c] + momentum * m);
      running_var.data()[c] =
          static_cast<float>((1.0 - momentum) * running_var.data()[c] + momentum * v_running);
    } else {
      m = running_mean.data()[c];
      v = running_var.data()[c];
    }
    const double invstd = 1.0 / std::sqrt(v + eps);
    (*mean_used)[static_cast<size_t>(c)] = static_cast<float>(m);
    (*invstd_used)[static_cast<size_t>(c)] = static_cast<float>(invstd);
    const float a = static_cast<float>(invstd) * gd[c];
    const float bias = bd[c] - static_cast<float>(m) * a;
    for (int64_t b = 0; b < B; ++b) {
      const float* p = xd.data() + (b * C + c) * spatial;
      float* q = od.data() + (b * C + c) * spatial;
      for (int64_t i = 0; i < spatial; ++i) q[i] = a * p[i] + bias;
    }
  }

  record_node("batch_norm", out, {x, gamma, beta},
              [x, gamma, beta, mean_used, invstd_used, train, B, C, spatial,
               n](std::span<const float> gy) mutable {
                auto xd2 = x.data();
                auto gd2 = gamma.data();
                std::vector<float> gx(x.requires_grad() ? static_cast<size_t>(x.numel()) : 0, 0.0f);
                std::vector<float> ggamma(static_cast<size_t>(C), 0.0f);
                std::vector<float> gbeta(static_cast<size_t>(C), 0.0f);
                for (int64_t c = 0; c < C; ++c) {
                  const double m = (*mean_used)[static_cast<size_t>(c)];
                  const double istd = (*invstd_used)[static_cast<size_t>(c)];
                  double sum_gy = 0.0, sum_gy_xhat = 0.0;
                  for (int64_t b = 0; b < B; ++b) {
                    const float* p = xd2.data() + (b * C + c) * spatial;
                    const float* gp = gy.data() + (b * C + c) * spatial;
                    for (int64_t i = 0; i < spatial; ++i) {
                      const double xhat = (p[i] - m) * istd;
                      sum_gy += gp[i];
                      sum_gy_xhat += gp[i] * xhat;
                    }
                  }
                  ggamma[static_cast<size_t>(c)] = static_cast<float>(sum_gy_xhat);
                  gbeta[static_cast<size_t>(c)] = static_cast<float>(sum_gy);
                  if (x.requires_grad()) {
                    const double scale = gd2[c] * istd;
                    for (int64_t b = 0; b < B; ++b) {
                      const float* p = xd2.data() + (b * C + c) * spatial;
                      const float* gp = gy.data() + (b * C + c) * spatial;
                      float* gq = gx.data() + (b * C + c) * spatial;
                      for (int64_t i = 0; i < spatial; ++i) {
                        if (train) {
                          const double xhat = (p[i] - m) * istd;
                          gq[i] += static_cast<float>(
                              scale * (gp[i] - sum_gy / n - xhat * sum_gy_xhat / n));
                        } else {
                          gq[i] += static_cast<float>(scale * gp[i]);
                        }
                      }
                    }
                  }
                }
                if (x.requires_grad()) accumulate_grad(*x.impl(), gx);
                if (gamma.requires_grad()) accumulate_grad(*gamma.impl(), ggamma);
                if (beta.requires_grad()) accumulate_grad(*beta.impl(), gbeta);
              });
  return out;
}

}  // namespace dnas
