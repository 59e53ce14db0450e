#include <limits>

#include "dnas/ops.hpp"

namespace dnas {

namespace {

struct PoolGeom {
  int nd;
  int64_t batch, ch, window, stride;
  int64_t in[3], out[3];
  int64_t in_spatial, out_spatial;
};

PoolGeom pool_geom(const Tensor& x, int window, int stride, int nd, const char* name) {
  check_input(x.ndim() == nd + 2, std::string(name) + ": input must be rank " +
                                      std::to_string(nd + 2) + ", got " + shape_str(x.shape()));
  check_input(window >= 1 && stride >= 1, std::string(name) + ": window and stride must be >= 1");
  PoolGeom g{};
  g.nd = nd;
  g.batch = x.dim(0);
  g.ch = x.dim(1);
  g.window = window;
  g.stride = stride;
  g.in_spatial = 1;
  g.out_spatial = 1;
  for (int i = 0; i < 3; ++i) {
    g.in[i] = i < 3 - nd ? 1 : x.dim(2 + i - (3 - nd));
    check_input(g.in[i] >= (i < 3 - nd ? 1 : window),
                std::string(name) + ": window larger than input " + shape_str(x.shape()));
    g.out[i] = i < 3 - nd ? 1 : (g.in[i] - window) / stride + 1;
    g.in_spatial *= g.in[i];
    g.out_spatial *= g.out[i];
  }
  return g;
}

template <bool kMax>
Tensor pool_nd(const Tensor& x, int window, int stride, int nd, const char* name) {
  PoolGeom g = pool_geom(x, window, stride, nd, name);
  Shape os{g.batch, g.ch};
  for (int i = 3 - nd; i < 3; ++i) os.push_back(g.out[i]);
  Tensor out = Tensor::zeros(os);
  auto xd = x.data();
  auto od = out.data();
  // For max pooling remember the winning input offset of each output
  // element (first maximum in row-major scan order).
  auto argmax = std::make_shared<std::vector<int64_t>>();
  if (kMax) argmax->resize(static_cast<size_t>(out.numel()));

  const int64_t planes = g.batch * g.ch;
  const double inv_count = 1.0 / (static_cast<double>(g.window) * g.window * (nd == 3 ? g.window : 1));
  for (int64_t p = 0; p < planes; ++p) {
    const float* src = xd.data() + p * g.in_spatial;
    float* dst = od.data() + p * g.out_spatial;
    int64_t* amax = kMax ? argmax->data() + p * g.out_spatial : nullptr;
    int64_t oi = 0;
    for (int64_t ot = 0; ot < g.out[0]; ++ot) {
      for (int64_t oh = 0; oh < g.out[1]; ++oh) {
        for (int64_t ow = 0; ow < g.out[2]; ++ow, ++oi) {
          const int64_t t0 = ot * g.stride, h0 = oh * g.stride, w0 = ow * g.stride;
          if (kMax) {
            float best = -std::numeric_limits<float>::infinity();
            int64_t best_at = 0;
            for (int64_t dt = 0; dt < (nd == 3 ? g.window : 1); ++dt)
              for (int64_t dh = 0; dh < g.window; ++dh)
                for (int64_t dw = 0; dw < g.window; ++dw) {
                  const int64_t at = ((t0 + dt) * g.in[1] + (h0 + dh)) * g.in[2] + (w0 + dw);
                  if (src[at] > best) {
                    best = src[at];
                    best_at = at;
                  }
                }
            dst[oi] = best;
            amax[oi] = best_at;
          } else {
            double acc = 0.0;
            for (int64_t dt = 0; dt < (nd == 3 ? g.window : 1); ++dt)
              for (int64_t dh = 0; dh < g.window; ++dh)
                for (int64_t dw = 0; dw < g.window; ++dw)
                  acc += src[((t0 + dt) * g.in[1] + (h0 + dh)) * g.in[2] + (w0 + dw)];
            dst[oi] = static_cast<float>(acc * inv_count);
          }
        }
      }
    }
  }

  record_node(name, out, {x}, [x, g, nd, argmax, inv_count](std::span<const float> gy) mutable {
    std::vector<float> gx(static_cast<size_t>(x.numel()), 0.0f);
    const int64_t planes = g.batch * g.ch;
    for (int64_t p = 0; p < planes; ++p) {
      const float* gsrc = gy.data() + p * g.out_spatial;
      float* gdst = gx.data() + p * g.in_spatial;
      if (kMax) {
        const int64_t* amax = argmax->data() + p * g.out_spatial;
        for (int64_t oi = 0; oi < g.out_spatial; ++oi) gdst[amax[oi]] += gsrc[oi];
      } else {
        const float share = static_cast<float>(inv_count);
        int64_t oi = 0;
        for (int64_t ot = 0; ot < g.out[0]; ++ot)
          for (int64_t oh = 0; oh < g.out[1]; ++oh)
            for (int64_t ow = 0; ow < g.out[2]; ++ow, ++oi) {
              const int64_t t0 = ot * g.stride, h0 = oh * g.stride, w0 = ow * g.stride;
              const float gshare = gsrc[oi] * share;
              for (int64_t dt = 0; dt < (nd == 3 ? g.window : 1); ++dt)
                for (int64_t dh = 0; dh < g.window; ++dh)
                  for (int64_t dw = 0; dw < g.window; ++dw)
                    gdst[((t0 + dt) * g.in[1] + (h0 + dh)) * g.in[2] + (w0 + dw)] += gshare;
            }
      }
    }
    accumulate_grad(*x.impl(), gx);
  });
  return out;
}

template <bool kMax>
Tensor global_pool(const Tensor& x, const char* name) {
  check_input(x.ndim() >= 3, std::string(name) + ": input must be [B,C,...], got " + shape_str(x.shape()));
  const int64_t planes = x.dim(0) * x.dim(1);
  const int64_t spatial = x.numel() / planes;
  Tensor out = Tensor::zeros({x.dim(0), x.dim(1)});
  auto xd = x.data();
  auto od = out.data();
  auto argmax = std::make_shared<std::vector<int64_t>>();
  if (kMax) argmax->resize(static_cast<size_t>(planes));
  for (int64_t p = 0; p < planes; ++p) {
    const float* src = xd.data() + p * spatial;
    if (kMax) {
      float best = src[0];
      int64_t at = 0;
      for (int64_t i = 1; i < spatial; ++i)
        if (src[i] > best) {
          best = src[i];
          at = i;
        }
      od[p] = best;
      (*argmax)[static_cast<size_t>(p)] = at;
    } else {
      double acc = 0.0;
      for (int64_t i = 0; i < spatial; ++i) acc += src[i];
      od[p] = static_cast<float>(acc / static_cast<double>(spatial));
    }
  }
  record_node(name, out, {x}, [x, planes, spatial, argmax](std::span<const float> gy) mutable {
    std::vector<float> gx(static_cast<size_t>(x.numel()), 0.0f);
    for (int64_t p = 0; p < planes; ++p) {
      if (kMax) {
        gx[static_cast<size_t>(p * spatial + (*argmax)[static_cast<size_t>(p)])] += gy[p];
      } else {
        const float share = gy[p] / static_cast<float>(spatial);
        float* dst = gx.data() + p * spatial;
        for (int64_t i = 0; i < spatial; ++i) dst[i] += share;
      }
    }
    accumulate_grad(*x.impl(), gx);
  });
  return out;
}

}  // namespace

Tensor max_pool2d(const Tensor& x, int window, int stride) { return pool_nd<true>(x, window, stride, 2, "max_pool2d"); }
Tensor avg_pool2d(const Tensor& x, int window, int stride) { return pool_nd<false>(x, window, stride, 2, "avg_pool2d"); }
Tensor max_pool3d(const Tensor& x, int window, int stride) { return pool_nd<true>(x, window, stride, 3, "max_pool3d"); }
Tensor avg_pool3d(const Tensor& x, int window, int stride) { return pool_nd<false>(x, window, stride, 3, "avg_pool3d"); }
Tensor global_avg_pool(const Tensor& x) { return global_pool<false>(x, "global_avg_pool"); }
Tensor global_max_pool(const Tensor& x) { return global_pool<true>(x, "global_max_pool"); }

}  // namespace dnas
