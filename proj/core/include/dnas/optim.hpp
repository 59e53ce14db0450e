#pragma once

#include <unordered_map>
#include <vector>

#include "dnas/tensor.hpp"

namespace dnas {

// SGD with momentum and (decoupled-from-nothing, classic L2) weight decay.
// step() touches only parameters whose grad is populated, so a stage-wise
// backward updates exactly the layers it reached; touched grads are
// cleared afterwards.
class Sgd {
 public:
  Sgd(float lr, float momentum = 0.9f, float weight_decay = 0.0f)
      : lr_(lr), momentum_(momentum), weight_decay_(weight_decay) {
    check_input(lr > 0.0f, "sgd: learning rate must be positive");
  }

  void set_lr(float lr) {
    check_input(lr > 0.0f, "sgd: learning rate must be positive");
    lr_ = lr;
  }
  float lr() const { return lr_; }
  float momentum() const { return momentum_; }
  float weight_decay() const { return weight_decay_; }
  int64_t step_count() const { return step_count_; }

  void step(const std::vector<Tensor>& params);

  // Momentum buffers keyed by parameter identity, for checkpointing.
  const std::unordered_map<const TensorImpl*, std::vector<float>>& velocity() const {
    return velocity_;
  }
  std::vector<float>& velocity_for(const Tensor& param) {
    return velocity_[param.impl().get()];
  }

 private:
  float lr_, momentum_, weight_decay_;
  int64_t step_count_ = 0;
  std::unordered_map<const TensorImpl*, std::vector<float>> velocity_;
};

// lr(e) = base * (1 + cos(pi * e / total)) / 2
float cosine_annealing_lr(int64_t epoch, int64_t total_epochs, float base_lr);

// Scans the per-epoch history of a monitored loss (lower is better) and
// decays the rate by `factor` each time `patience` consecutive epochs fail
// to improve on the best value seen so far.
float plateau_lr(const std::vector<double>& history, float base_lr, int64_t patience,
                 float factor);

}  // namespace dnas
