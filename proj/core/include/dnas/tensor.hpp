#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dnas/common.hpp"

namespace dnas {

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

struct TensorImpl;

// One recorded operation. Holds its input tensors alive and knows how to
// push the output gradient back to them.
struct Node {
  const char* op = "";
  std::vector<std::shared_ptr<TensorImpl>> inputs;
  std::weak_ptr<TensorImpl> output;
  // Receives the gradient of the node's output; accumulates into inputs.
  std::function<void(std::span<const float>)> backward_fn;
  bool consumed = false;
};

struct TensorImpl {
  Shape shape;
  std::vector<float> data;
  std::vector<float> grad;  // empty until backward populates it
  bool requires_grad = false;
  std::shared_ptr<Node> grad_fn;
  // Exact value of scalar reduction results (sums are accumulated in
  // 64-bit; the float in `data` is the rounded copy).
  double scalar64 = 0.0;
  bool has_scalar64 = false;
};

// Dense float tensor with reverse-mode autodiff. Value-semantics handle:
// copies share the underlying storage.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, float value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<float> data, bool requires_grad = false);
  static Tensor scalar(float value);
  // He-style normal init, std = sqrt(2 / fan_in).
  static Tensor randn(Shape shape, std::mt19937& rng, float stddev, bool requires_grad = false);
  static Tensor uniform(Shape shape, std::mt19937& rng, float lo, float hi, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  int64_t ndim() const { return static_cast<int64_t>(impl_->shape.size()); }
  int64_t dim(int64_t i) const { return impl_->shape[static_cast<size_t>(i)]; }
  int64_t numel() const { return static_cast<int64_t>(impl_->data.size()); }

  std::span<float> data() { return impl_->data; }
  std::span<const float> data() const { return impl_->data; }
  float item() const;
  // Scalar value at reduction precision (64-bit when recorded).
  double item64() const;

  bool requires_grad() const { return impl_->requires_grad; }
  Tensor& set_requires_grad(bool v);

  bool has_grad() const { return impl_ && !impl_->grad.empty(); }
  std::span<float> grad();
  std::span<const float> grad() const;
  void clear_grad() { impl_->grad.clear(); }

  // Reverse-mode sweep from a scalar. Visits each recorded node exactly
  // once in reverse topological order, then releases the graph; a second
  // backward over the same graph is rejected.
  void backward();

  // Copy of the values with no recorded history.
  Tensor detach() const;

  std::shared_ptr<TensorImpl>& impl() { return impl_; }
  const std::shared_ptr<TensorImpl>& impl() const { return impl_; }

 private:
  std::shared_ptr<TensorImpl> impl_;
};

// Whether ops record backward nodes. Disabled inside NoGradGuard scopes
// (e.g. teacher inference during search/transfer).
struct GradMode {
  static bool enabled();
  static void set(bool v);
};

struct NoGradGuard {
  NoGradGuard() : prev_(GradMode::enabled()) { GradMode::set(false); }
  ~NoGradGuard() { GradMode::set(prev_); }

 private:
  bool prev_;
};

// Accumulates g into t's grad buffer (allocating it zero-filled first).
void accumulate_grad(TensorImpl& t, std::span<const float> g);
// Move form: adopts the buffer outright when no grad exists yet.
void accumulate_grad(TensorImpl& t, std::vector<float>&& g);

// Attaches a backward node to out when grad recording is active and any
// input requires grad. Returns true if the node was attached.
bool record_node(const char* op, Tensor& out, std::vector<Tensor> inputs,
                 std::function<void(std::span<const float>)> backward_fn);

}  // namespace dnas
