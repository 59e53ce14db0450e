#include <cmath>

#include "dnas/ops.hpp"
#include "dnas/threadpool.hpp"

namespace dnas {

namespace {

constexpr int64_t kEltwiseChunk = 1 << 16;

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  check_input(a.shape() == b.shape(), std::string(op) + ": shape mismatch " +
                                          shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  Tensor out = Tensor::zeros(a.shape());
  auto ad = a.data(), bd = b.data();
  auto od = out.data();
  for (int64_t i = 0; i < a.numel(); ++i) od[i] = ad[i] + bd[i];
  if (a.impl()->has_scalar64 && b.impl()->has_scalar64) {
    out.impl()->scalar64 = a.impl()->scalar64 + b.impl()->scalar64;
    out.impl()->has_scalar64 = true;
  }
  record_node("add", out, {a, b}, [a, b](std::span<const float> g) mutable {
    if (a.requires_grad()) accumulate_grad(*a.impl(), g);
    if (b.requires_grad()) accumulate_grad(*b.impl(), g);
  });
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  Tensor out = Tensor::zeros(a.shape());
  auto ad = a.data(), bd = b.data();
  auto od = out.data();
  for (int64_t i = 0; i < a.numel(); ++i) od[i] = ad[i] - bd[i];
  record_node("sub", out, {a, b}, [a, b](std::span<const float> g) mutable {
    if (a.requires_grad()) accumulate_grad(*a.impl(), g);
    if (b.requires_grad()) {
      std::vector<float> neg(g.size());
      for (size_t i = 0; i < g.size(); ++i) neg[i] = -g[i];
      accumulate_grad(*b.impl(), std::move(neg));
    }
  });
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  Tensor out = Tensor::zeros(a.shape());
  auto ad = a.data(), bd = b.data();
  auto od = out.data();
  for (int64_t i = 0; i < a.numel(); ++i) od[i] = ad[i] * bd[i];
  record_node("mul", out, {a, b}, [a, b](std::span<const float> g) mutable {
    if (a.requires_grad()) {
      std::vector<float> buf(g.size());
      for (size_t i = 0; i < g.size(); ++i) buf[i] = g[i] * b.data()[i];
      accumulate_grad(*a.impl(), std::move(buf));
    }
    if (b.requires_grad()) {
      std::vector<float> buf(g.size());
      for (size_t i = 0; i < g.size(); ++i) buf[i] = g[i] * a.data()[i];
      accumulate_grad(*b.impl(), std::move(buf));
    }
  });
  return out;
}

Tensor mul_scalar(const Tensor& a, float s) {
  Tensor out = Tensor::zeros(a.shape());
  auto ad = a.data();
  auto od = out.data();
  for (int64_t i = 0; i < a.numel(); ++i) od[i] = ad[i] * s;
  if (a.impl()->has_scalar64) {
    out.impl()->scalar64 = a.impl()->scalar64 * static_cast<double>(s);
    out.impl()->has_scalar64 = true;
  }
  record_node("mul_scalar", out, {a}, [a, s](std::span<const float> g) mutable {
    std::vector<float> buf(g.size());
    for (size_t i = 0; i < g.size(); ++i) buf[i] = g[i] * s;
    accumulate_grad(*a.impl(), std::move(buf));
  });
  return out;
}

Tensor relu(const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  auto xd = x.data();
  auto od = out.data();
  parallel_chunks(x.numel(), kEltwiseChunk, [&](int64_t lo, int64_t hi) {
    for (int64_t i = lo; i < hi; ++i) od[i] = xd[i] > 0.0f ? xd[i] : 0.0f;
  });
  record_node("relu", out, {x}, [x](std::span<const float> g) mutable {
    std::vector<float> buf(g.size());
    auto xd2 = x.data();
    parallel_chunks(static_cast<int64_t>(g.size()), kEltwiseChunk, [&](int64_t lo, int64_t hi) {
      for (int64_t i = lo; i < hi; ++i) buf[static_cast<size_t>(i)] = xd2[i] > 0.0f ? g[i] : 0.0f;
    });
    accumulate_grad(*x.impl(), std::move(buf));
  });
  return out;
}

Tensor concat(const std::vector<Tensor>& ts, int64_t axis) {
  check_input(!ts.empty(), "concat: empty tensor list");
  const Shape& s0 = ts[0].shape();
  check_input(axis >= 0 && axis < static_cast<int64_t>(s0.size()),
              "concat: axis " + std::to_string(axis) + " out of range for " + shape_str(s0));
  int64_t axis_total = 0;
  for (const auto& t : ts) {
    check_input(t.ndim() == static_cast<int64_t>(s0.size()), "concat: rank mismatch");
    for (int64_t d = 0; d < t.ndim(); ++d) {
      if (d != axis)
        check_input(t.dim(d) == s0[static_cast<size_t>(d)],
                    "concat: extent mismatch at dim " + std::to_string(d));
    }
    axis_total += t.dim(axis);
  }
  Shape os = s0;
  os[static_cast<size_t>(axis)] = axis_total;

  int64_t outer = 1, inner = 1;
  for (int64_t d = 0; d < axis; ++d) outer *= s0[static_cast<size_t>(d)];
  for (int64_t d = axis + 1; d < static_cast<int64_t>(s0.size()); ++d) inner *= s0[static_cast<size_t>(d)];

  Tensor out = Tensor::zeros(os);
  auto od = out.data();
  int64_t offset = 0;
  for (const auto& t : ts) {
    const int64_t chunk = t.dim(axis) * inner;
    auto td = t.data();
    parallel_chunks(outer, std::max<int64_t>(1, kEltwiseChunk / chunk),
                    [&](int64_t lo, int64_t hi) {
                      for (int64_t o = lo; o < hi; ++o)
                        std::copy(td.begin() + o * chunk, td.begin() + (o + 1) * chunk,
                                  od.begin() + o * axis_total * inner + offset);
                    });
    offset += chunk;
  }

  record_node("concat", out, ts, [ts, axis_total, outer, inner](std::span<const float> g) mutable {
    int64_t off = 0;
    for (auto& t : ts) {
      const int64_t axis_d = t.numel() / (outer * inner);
      const int64_t c = axis_d * inner;
      if (t.requires_grad()) {
        std::vector<float> buf(static_cast<size_t>(t.numel()));
        parallel_chunks(outer, std::max<int64_t>(1, kEltwiseChunk / c),
                        [&](int64_t lo, int64_t hi) {
                          for (int64_t o = lo; o < hi; ++o)
                            std::copy(g.begin() + o * axis_total * inner + off,
                                      g.begin() + o * axis_total * inner + off + c,
                                      buf.begin() + o * c);
                        });
        accumulate_grad(*t.impl(), std::move(buf));
      }
      off += c;
    }
  });
  return out;
}

Tensor softmax(const Tensor& x, int64_t axis) {
  check_input(axis >= 0 && axis < x.ndim(),
              "softmax: axis " + std::to_string(axis) + " out of range for " + shape_str(x.shape()));
  const int64_t k = x.dim(axis);
  int64_t outer = 1, inner = 1;
  for (int64_t d = 0; d < axis; ++d) outer *= x.dim(d);
  for (int64_t d = axis + 1; d < x.ndim(); ++d) inner *= x.dim(d);

  Tensor out = Tensor::zeros(x.shape());
  auto xd = x.data();
  auto od = out.data();
  for (int64_t o = 0; o < outer; ++o) {
    for (int64_t in = 0; in < inner; ++in) {
      const int64_t base = o * k * inner + in;
      float mx = xd[base];
      for (int64_t j = 1; j < k; ++j) mx = std::max(mx, xd[base + j * inner]);
      double denom = 0.0;
      for (int64_t j = 0; j < k; ++j) denom += std::exp(static_cast<double>(xd[base + j * inner] - mx));
      for (int64_t j = 0; j < k; ++j)
        od[base + j * inner] =
            static_cast<float>(std::exp(static_cast<double>(xd[base + j * inner] - mx)) / denom);
    }
  }

  record_node("softmax", out, {x}, [x, out, k, outer, inner](std::span<const float> g) mutable {
    // dx_j = y_j * (g_j - sum_i g_i y_i)
    std::vector<float> buf(g.size());
    auto yd = out.data();
    for (int64_t o = 0; o < outer; ++o) {
      for (int64_t in = 0; in < inner; ++in) {
        const int64_t base = o * k * inner + in;
        double dot = 0.0;
        for (int64_t j = 0; j < k; ++j) dot += static_cast<double>(g[base + j * inner]) * yd[base + j * inner];
        for (int64_t j = 0; j < k; ++j)
          buf[base + j * inner] = yd[base + j * inner] * (g[base + j * inner] - static_cast<float>(dot));
      }
    }
    accumulate_grad(*x.impl(), buf);
  });
  return out;
}

namespace {

Tensor reduce_all(const Tensor& x, bool take_mean, const char* name) {
  double acc = 0.0;
  for (float v : x.data()) acc += static_cast<double>(v);
  const double denom = take_mean ? static_cast<double>(x.numel()) : 1.0;
  const double value = acc / denom;
  Tensor out = Tensor::scalar(static_cast<float>(value));
  out.impl()->scalar64 = value;
  out.impl()->has_scalar64 = true;
  const float w = static_cast<float>(1.0 / denom);
  record_node(name, out, {x}, [x, w](std::span<const float> g) mutable {
    std::vector<float> buf(static_cast<size_t>(x.numel()), g[0] * w);
    accumulate_grad(*x.impl(), std::move(buf));
  });
  return out;
}

}  // namespace

Tensor sum(const Tensor& x) { return reduce_all(x, false, "sum"); }
Tensor mean(const Tensor& x) { return reduce_all(x, true, "mean"); }

Tensor weighted_sum(const std::vector<Tensor>& xs, const Tensor& weights) {
  check_input(!xs.empty(), "weighted_sum: empty operand list");
  check_input(weights.ndim() == 1 && weights.dim(0) == static_cast<int64_t>(xs.size()),
              "weighted_sum: weights must be 1-D with one entry per operand");
  for (const auto& t : xs)
    check_input(t.shape() == xs[0].shape(), "weighted_sum: operand shape mismatch");

  Tensor out = Tensor::zeros(xs[0].shape());
  auto od = out.data();
  auto wd = weights.data();
  parallel_chunks(out.numel(), kEltwiseChunk, [&](int64_t lo, int64_t hi) {
    for (size_t m = 0; m < xs.size(); ++m) {
      auto xd = xs[m].data();
      const float w = wd[m];
      for (int64_t i = lo; i < hi; ++i) od[i] += w * xd[i];
    }
  });

  std::vector<Tensor> inputs = xs;
  inputs.push_back(weights);
  record_node("weighted_sum", out, inputs, [xs, weights](std::span<const float> g) mutable {
    auto wd2 = weights.data();
    std::vector<float> wgrad(xs.size(), 0.0f);
    for (size_t m = 0; m < xs.size(); ++m) {
      auto xd = xs[m].data();
      if (xs[m].requires_grad()) {
        std::vector<float> buf(g.size());
        parallel_chunks(static_cast<int64_t>(g.size()), kEltwiseChunk,
                        [&](int64_t lo, int64_t hi) {
                          for (int64_t i = lo; i < hi; ++i)
                            buf[static_cast<size_t>(i)] = g[i] * wd2[m];
                        });
        accumulate_grad(*xs[m].impl(), std::move(buf));
      }
      if (weights.requires_grad()) {
        double dot = 0.0;
        for (size_t i = 0; i < g.size(); ++i) dot += static_cast<double>(g[i]) * xd[i];
        wgrad[m] = static_cast<float>(dot);
      }
    }
    if (weights.requires_grad()) accumulate_grad(*weights.impl(), std::move(wgrad));
  });
  return out;
}

}  // namespace dnas
