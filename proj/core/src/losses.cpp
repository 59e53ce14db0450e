#include <cmath>

#include "dnas/losses.hpp"
#include "dnas/ops.hpp"

namespace dnas {

namespace {
constexpr double kLogClamp = 1e-12;
}

Tensor cross_entropy(const Tensor& p, const Tensor& truth) {
  check_input(p.ndim() == 2 && truth.ndim() == 2 && p.shape() == truth.shape(),
              "cross_entropy: p and truth must both be [B,K], got " + shape_str(p.shape()) +
                  " vs " + shape_str(truth.shape()));
  const int64_t B = p.dim(0), K = p.dim(1);
  auto pd = p.data();
  auto td = truth.data();
  for (int64_t b = 0; b < B; ++b) {
    double row = 0.0;
    int ones = 0;
    for (int64_t k = 0; k < K; ++k) {
      row += pd[b * K + k];
      const float t = td[b * K + k];
      check_input(t == 0.0f || t == 1.0f, "cross_entropy: truth entries must be 0 or 1");
      ones += t == 1.0f;
    }
    check_input(std::abs(row - 1.0) <= 1e-5,
                "cross_entropy: p row " + std::to_string(b) + " does not sum to 1 (" +
                    std::to_string(row) + ")");
    check_input(ones == 1, "cross_entropy: truth row " + std::to_string(b) + " is not one-hot");
  }

  double acc = 0.0;
  for (int64_t i = 0; i < p.numel(); ++i) {
    if (td[i] == 1.0f) acc -= std::log(std::max(static_cast<double>(pd[i]), kLogClamp));
  }
  const double value = acc / B;
  Tensor out = Tensor::scalar(static_cast<float>(value));
  out.impl()->scalar64 = value;
  out.impl()->has_scalar64 = true;

  record_node("cross_entropy", out, {p, truth}, [p, truth, B, K](std::span<const float> g) mutable {
    if (!p.requires_grad()) return;
    auto pd2 = p.data();
    auto td2 = truth.data();
    std::vector<float> gp(static_cast<size_t>(p.numel()), 0.0f);
    const float scale = g[0] / static_cast<float>(B);
    for (int64_t i = 0; i < p.numel(); ++i) {
      if (td2[i] == 1.0f && pd2[i] > static_cast<float>(kLogClamp))
        gp[static_cast<size_t>(i)] = -scale / pd2[i];
    }
    accumulate_grad(*p.impl(), gp);
  });
  return out;
}

Tensor mse(const Tensor& p, const Tensor& q) {
  check_input(p.shape() == q.shape(), "mse: shape mismatch " + shape_str(p.shape()) + " vs " +
                                          shape_str(q.shape()));
  const int64_t n = p.numel();
  auto pd = p.data();
  auto qd = q.data();
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(pd[i]) - qd[i];
    acc += d * d;
  }
  const double value = acc / n;
  Tensor out = Tensor::scalar(static_cast<float>(value));
  out.impl()->scalar64 = value;
  out.impl()->has_scalar64 = true;

  record_node("mse", out, {p, q}, [p, q, n](std::span<const float> g) mutable {
    auto pd2 = p.data();
    auto qd2 = q.data();
    const float scale = 2.0f * g[0] / static_cast<float>(n);
    std::vector<float> buf(static_cast<size_t>(n));
    if (p.requires_grad()) {
      for (int64_t i = 0; i < n; ++i) buf[static_cast<size_t>(i)] = scale * (pd2[i] - qd2[i]);
      accumulate_grad(*p.impl(), buf);
    }
    if (q.requires_grad()) {
      for (int64_t i = 0; i < n; ++i) buf[static_cast<size_t>(i)] = scale * (qd2[i] - pd2[i]);
      accumulate_grad(*q.impl(), buf);
    }
  });
  return out;
}

Tensor distill_loss(const Tensor& p_model, const Tensor& p_teacher, const Tensor& truth,
                    float lambda) {
  check_input(lambda >= 0.0f && lambda <= 1.0f, "distill loss: lambda must be in [0,1]");
  check_input(!p_teacher.requires_grad(),
              "distill loss: teacher distribution must be detached (teacher is frozen)");
  return add(mul_scalar(mse(p_model, p_teacher), lambda),
             mul_scalar(cross_entropy(p_model, truth), 1.0f - lambda));
}

Tensor brightness_augment(const Tensor& batch, float range_lo, float range_hi, std::mt19937& rng) {
  check_input(batch.ndim() >= 2, "brightness_augment: batch must be [B,C,...]");
  check_input(range_lo > 0.0f && range_lo <= range_hi,
              "brightness_augment: range must be positive and ordered");
  const int64_t B = batch.dim(0);
  const int64_t per = batch.numel() / B;
  Tensor out = Tensor::zeros(batch.shape());
  auto src = batch.data();
  auto dst = out.data();
  std::uniform_real_distribution<float> dist(range_lo, range_hi);
  for (int64_t b = 0; b < B; ++b) {
    const float f = dist(rng);
    const float* s = src.data() + b * per;
    float* d = dst.data() + b * per;
    for (int64_t i = 0; i < per; ++i) d[i] = std::min(1.0f, std::max(0.0f, s[i] * f));
  }
  return out;
}

}  // namespace dnas
