#pragma once

#include <random>

#include "dnas/tensor.hpp"

namespace dnas {

// Mean over the batch of -sum_k truth * log(max(p, 1e-12)).
// p rows must already be distributions; truth rows must be one-hot.
Tensor cross_entropy(const Tensor& p, const Tensor& truth);

// Mean over all B*K elements of (p - q)^2.
Tensor mse(const Tensor& p, const Tensor& q);

// lambda * mse(p_model, p_teacher) + (1 - lambda) * cross_entropy(p_model, truth).
// The teacher distribution must be detached (its parameters stay fixed).
Tensor distill_loss(const Tensor& p_model, const Tensor& p_teacher, const Tensor& truth,
                    float lambda);

inline Tensor search_loss(const Tensor& p_super, const Tensor& p_teacher, const Tensor& truth,
                          float lambda) {
  return distill_loss(p_super, p_teacher, truth, lambda);
}
inline Tensor transfer_loss(const Tensor& p_student, const Tensor& p_teacher, const Tensor& truth,
                            float lambda) {
  return distill_loss(p_student, p_teacher, truth, lambda);
}

// Multiplies each image of a [B,C,...] batch by an independent factor drawn
// uniformly from [range_lo, range_hi], clamped back to [0,1]. Plain data
// augmentation: the result carries no gradient history.
Tensor brightness_augment(const Tensor& batch, float range_lo, float range_hi, std::mt19937& rng);

}  // namespace dnas
