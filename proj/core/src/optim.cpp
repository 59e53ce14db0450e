#include <cmath>

#include "dnas/optim.hpp"

namespace dnas {

void Sgd::step(const std::vector<Tensor>& params) {
  for (const auto& p : params) {
    if (!p.has_grad()) continue;
    auto& vel = velocity_[p.impl().get()];
    if (vel.empty()) vel.assign(static_cast<size_t>(p.numel()), 0.0f);
    auto theta = p.impl()->data.data();
    auto g = p.impl()->grad.data();
    const size_t n = p.impl()->data.size();
    for (size_t i = 0; i < n; ++i) {
      const float grad = g[i] + weight_decay_ * theta[i];
      vel[i] = momentum_ * vel[i] + grad;
      theta[i] -= lr_ * vel[i];
    }
    p.impl()->grad.clear();
  }
  ++step_count_;
}

float cosine_annealing_lr(int64_t epoch, int64_t total_epochs, float base_lr) {
  check_input(total_epochs > 0, "cosine_annealing_lr: total_epochs must be positive");
  check_input(base_lr > 0.0f, "cosine_annealing_lr: base_lr must be positive");
  check_input(epoch >= 0 && epoch <= total_epochs, "cosine_annealing_lr: epoch out of range");
  const double phase = M_PI * static_cast<double>(epoch) / static_cast<double>(total_epochs);
  return static_cast<float>(base_lr * (1.0 + std::cos(phase)) / 2.0);
}

float plateau_lr(const std::vector<double>& history, float base_lr, int64_t patience,
                 float factor) {
  check_input(base_lr > 0.0f, "plateau_lr: base_lr must be positive");
  check_input(patience > 0, "plateau_lr: patience must be positive");
  check_input(factor > 0.0f && factor <= 1.0f, "plateau_lr: factor must be in (0,1]");
  float lr = base_lr;
  double best = std::numeric_limits<double>::infinity();
  int64_t stale = 0;
  for (double v : history) {
    if (v < best) {
      best = v;
      stale = 0;
    } else if (++stale >= patience) {
      lr *= factor;
      stale = 0;
    }
  }
  return lr;
}

}  // namespace dnas
