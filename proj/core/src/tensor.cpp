#include "dnas/tensor.hpp"

#include <numeric>
#include <sstream>

namespace dnas {

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) os << 'x';
    os << s[i];
  }
  os << ']';
  return os.str();
}

namespace {

std::shared_ptr<TensorImpl> make_impl(Shape shape, bool requires_grad) {
  for (int64_t d : shape) check_input(d > 0, "tensor extents must be positive, got " + shape_str(shape));
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->requires_grad = requires_grad;
  return impl;
}

Tensor wrap(std::shared_ptr<TensorImpl> impl) {
  Tensor t;
  t.impl() = std::move(impl);
  return t;
}

}  // namespace

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto impl = make_impl(std::move(shape), requires_grad);
  impl->data.assign(static_cast<size_t>(shape_numel(impl->shape)), 0.0f);
  return wrap(std::move(impl));
}

Tensor Tensor::full(Shape shape, float value, bool requires_grad) {
  auto impl = make_impl(std::move(shape), requires_grad);
  impl->data.assign(static_cast<size_t>(shape_numel(impl->shape)), value);
  return wrap(std::move(impl));
}

Tensor Tensor::from_data(Shape shape, std::vector<float> data, bool requires_grad) {
  auto impl = make_impl(std::move(shape), requires_grad);
  check_input(static_cast<int64_t>(data.size()) == shape_numel(impl->shape),
              "data length " + std::to_string(data.size()) + " does not match shape " + shape_str(impl->shape));
  impl->data = std::move(data);
  return wrap(std::move(impl));
}

Tensor Tensor::scalar(float value) { return full({1}, value); }

Tensor Tensor::randn(Shape shape, std::mt19937& rng, float stddev, bool requires_grad) {
  auto t = zeros(std::move(shape), requires_grad);
  std::normal_distribution<float> dist(0.0f, stddev);
  for (auto& x : t.data()) x = dist(rng);
  return t;
}

Tensor Tensor::uniform(Shape shape, std::mt19937& rng, float lo, float hi, bool requires_grad) {
  auto t = zeros(std::move(shape), requires_grad);
  std::uniform_real_distribution<float> dist(lo, hi);
  for (auto& x : t.data()) x = dist(rng);
  return t;
}

float Tensor::item() const {
  check_input(numel() == 1, "item() requires a scalar tensor, got " + shape_str(shape()));
  return impl_->data[0];
}

double Tensor::item64() const {
  check_input(numel() == 1, "item64() requires a scalar tensor, got " + shape_str(shape()));
  return impl_->has_scalar64 ? impl_->scalar64 : static_cast<double>(impl_->data[0]);
}

Tensor& Tensor::set_requires_grad(bool v) {
  check_input(!impl_->grad_fn, "requires_grad can only be toggled on leaf tensors");
  impl_->requires_grad = v;
  return *this;
}

std::span<float> Tensor::grad() {
  check_input(has_grad(), "tensor has no gradient (backward not run or not reachable)");
  return impl_->grad;
}

std::span<const float> Tensor::grad() const {
  check_input(has_grad(), "tensor has no gradient (backward not run or not reachable)");
  return impl_->grad;
}

Tensor Tensor::detach() const {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = impl_->shape;
  impl->data = impl_->data;
  impl->scalar64 = impl_->scalar64;
  impl->has_scalar64 = impl_->has_scalar64;
  return wrap(std::move(impl));
}

namespace {
thread_local bool g_grad_enabled = true;
}

bool GradMode::enabled() { return g_grad_enabled; }
void GradMode::set(bool v) { g_grad_enabled = v; }

void accumulate_grad(TensorImpl& t, std::span<const float> g) {
  check_internal(g.size() == t.data.size(), "gradient size mismatch");
  if (t.grad.empty()) t.grad.assign(t.data.size(), 0.0f);
  for (size_t i = 0; i < g.size(); ++i) t.grad[i] += g[i];
}

void accumulate_grad(TensorImpl& t, std::vector<float>&& g) {
  check_internal(g.size() == t.data.size(), "gradient size mismatch");
  if (t.grad.empty()) {
    t.grad = std::move(g);
    return;
  }
  for (size_t i = 0; i < g.size(); ++i) t.grad[i] += g[i];
}

bool record_node(const char* op, Tensor& out, std::vector<Tensor> inputs,
                 std::function<void(std::span<const float>)> backward_fn) {
  if (!GradMode::enabled()) return false;
  bool any = false;
  for (const auto& in : inputs) any = any || in.requires_grad();
  if (!any) return false;
  auto node = std::make_shared<Node>();
  node->op = op;
  node->inputs.reserve(inputs.size());
  for (auto& in : inputs) node->inputs.push_back(in.impl());
  node->output = out.impl();
  node->backward_fn = std::move(backward_fn);
  out.impl()->grad_fn = std::move(node);
  out.impl()->requires_grad = true;
  return true;
}

}  // namespace dnas
