#include <Eigen/Dense>
#include <cstring>

#include "dnas/ops.hpp"
#include "dnas/threadpool.hpp"

namespace dnas {

namespace {

using MatMap = Eigen::Map<Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// Shared geometry for 2-D (nd=2) and 3-D (nd=3) convolution. Spatial dims
// are stored depth-major: {T,}H,W.
struct ConvGeom {
  int nd;
  int64_t batch, cin, cout, groups, k, stride, pad;
  int64_t in[3], out[3];       // spatial extents, index 0 unused for nd=2
  int64_t in_spatial, out_spatial;
  int64_t cin_g, cout_g;       // channels per group
  int64_t col_rows;            // (cin/g) * k^nd

  int64_t out_extent(int64_t i) const { return (in[i] + 2 * pad - k) / stride + 1; }
};

ConvGeom make_geom(const Tensor& x, const Tensor& w, int stride, int padding, int groups, int nd,
                   const char* name) {
  check_input(x.ndim() == nd + 2, std::string(name) + ": input must be rank " +
                                      std::to_string(nd + 2) + ", got " + shape_str(x.shape()));
  check_input(w.ndim() == nd + 2, std::string(name) + ": weight must be rank " +
                                      std::to_string(nd + 2) + ", got " + shape_str(w.shape()));
  check_input(stride >= 1, std::string(name) + ": stride must be >= 1");
  check_input(padding >= 0, std::string(name) + ": padding must be >= 0");
  check_input(groups >= 1, std::string(name) + ": groups must be >= 1");

  ConvGeom g{};
  g.nd = nd;
  g.batch = x.dim(0);
  g.cin = x.dim(1);
  g.cout = w.dim(0);
  g.groups = groups;
  g.stride = stride;
  g.pad = padding;
  g.k = w.dim(2);
  for (int i = 0; i < nd; ++i) {
    check_input(w.dim(2 + i) == g.k, std::string(name) + ": kernels must be square/cubic, got " +
                                         shape_str(w.shape()));
    g.in[3 - nd + i] = x.dim(2 + i);
  }
  if (nd == 2) g.in[0] = 1;
  check_input(g.cin % groups == 0 && g.cout % groups == 0,
              std::string(name) + ": groups=" + std::to_string(groups) +
                  " must divide in channels " + std::to_string(g.cin) + " and out channels " +
                  std::to_string(g.cout));
  check_input(w.dim(1) == g.cin / groups,
              std::string(name) + ": weight expects " + std::to_string(w.dim(1) * groups) +
                  " input channels, input has " + std::to_string(g.cin));
  g.cin_g = g.cin / groups;
  g.cout_g = g.cout / groups;
  int64_t pow_k = 1;
  g.in_spatial = 1;
  g.out_spatial = 1;
  for (int i = 3 - nd; i < 3; ++i) {
    check_input(g.in[i] + 2 * g.pad >= g.k,
                std::string(name) + ": kernel larger than padded input");
    g.out[i] = g.out_extent(i);
    g.in_spatial *= g.in[i];
    g.out_spatial *= g.out[i];
    pow_k *= g.k;
  }
  if (nd == 2) g.out[0] = 1;
  g.col_rows = g.cin_g * pow_k;
  return g;
}

// Unfolds one group's channels of one image into a col matrix of shape
// [cin_g * k^nd, out_spatial]. `src` points at the image's group base.
void im2col(const ConvGeom& g, const float* src, float* col) {
  const int64_t IH = g.in[1], IW = g.in[2], IT = g.in[0];
  const int64_t OH = g.out[1], OW = g.out[2], OT = g.out[0];
  float* dst = col;
  for (int64_t c = 0; c < g.cin_g; ++c) {
    const float* plane = src + c * g.in_spatial;
    for (int64_t kt = 0; kt < (g.nd == 3 ? g.k : 1); ++kt) {
      for (int64_t kr = 0; kr < g.k; ++kr) {
        for (int64_t kc = 0; kc < g.k; ++kc) {
          for (int64_t ot = 0; ot < OT; ++ot) {
            const int64_t it = g.nd == 3 ? ot * g.stride - g.pad + kt : 0;
            const bool t_ok = g.nd == 2 || (it >= 0 && it < IT);
            for (int64_t oh = 0; oh < OH; ++oh) {
              const int64_t ih = oh * g.stride - g.pad + kr;
              if (!t_ok || ih < 0 || ih >= IH) {
                std::memset(dst, 0, sizeof(float) * OW);
                dst += OW;
                continue;
              }
              const float* row = plane + (it * IH + ih) * IW;
              if (g.stride == 1) {
                // iw = ow - pad + kc stays in [0,IW): ow in [pad-kc, IW-1+pad-kc]
                const int64_t lo = std::max<int64_t>(0, g.pad - kc);
                const int64_t hi = std::min<int64_t>(OW - 1, IW - 1 + g.pad - kc);
                if (lo > 0) std::memset(dst, 0, sizeof(float) * lo);
                if (hi >= lo)
                  std::memcpy(dst + lo, row + lo - g.pad + kc, sizeof(float) * (hi - lo + 1));
                if (hi + 1 < OW) std::memset(dst + hi + 1, 0, sizeof(float) * (OW - hi - 1));
                dst += OW;
              } else {
                for (int64_t ow = 0; ow < OW; ++ow) {
                  const int64_t iw = ow * g.stride - g.pad + kc;
                  *dst++ = (iw >= 0 && iw < IW) ? row[iw] : 0.0f;
                }
              }
            }
          }
        }
      }
    }
  }
}

// Scatter-add of a col-matrix gradient back onto the input image (inverse
// of im2col for the same geometry).
void col2im_add(const ConvGeom& g, const float* col, float* dst_img) {
  const int64_t IH = g.in[1], IW = g.in[2], IT = g.in[0];
  const int64_t OH = g.out[1], OW = g.out[2], OT = g.out[0];
  const float* src = col;
  for (int64_t c = 0; c < g.cin_g; ++c) {
    float* plane = dst_img + c * g.in_spatial;
    for (int64_t kt = 0; kt < (g.nd == 3 ? g.k : 1); ++kt) {
      for (int64_t kr = 0; kr < g.k; ++kr) {
        for (int64_t kc = 0; kc < g.k; ++kc) {
          for (int64_t ot = 0; ot < OT; ++ot) {
            const int64_t it = g.nd == 3 ? ot * g.stride - g.pad + kt : 0;
            const bool t_ok = g.nd == 2 || (it >= 0 && it < IT);
            for (int64_t oh = 0; oh < OH; ++oh) {
              const int64_t ih = oh * g.stride - g.pad + kr;
              if (!t_ok || ih < 0 || ih >= IH) {
                src += OW;
                continue;
              }
              float* row = plane + (it * IH + ih) * IW;
              for (int64_t ow = 0; ow < OW; ++ow) {
                const int64_t iw = ow * g.stride - g.pad + kc;
                if (iw >= 0 && iw < IW) row[iw] += src[ow];
              }
              src += OW;
            }
          }
        }
      }
    }
  }
}

bool is_pointwise(const ConvGeom& g) { return g.k == 1 && g.stride == 1 && g.pad == 0; }

void conv_forward(const ConvGeom& g, const float* x, const float* w, float* y) {
  auto& pool = global_pool();
  pool.parallel_for(g.batch, [&](int64_t b) {
    std::vector<float> col;
    if (!is_pointwise(g)) col.resize(static_cast<size_t>(g.col_rows * g.out_spatial));
    for (int64_t grp = 0; grp < g.groups; ++grp) {
      const float* src = x + (b * g.cin + grp * g.cin_g) * g.in_spatial;
      const float* colp = src;
      if (!is_pointwise(g)) {
        im2col(g, src, col.data());
        colp = col.data();
      }
      ConstMatMap W(w + grp * g.cout_g * g.col_rows, g.cout_g, g.col_rows);
      ConstMatMap C(colp, g.col_rows, g.out_spatial);
      MatMap Y(y + (b * g.cout + grp * g.cout_g) * g.out_spatial, g.cout_g, g.out_spatial);
      Y.noalias() = W * C;
    }
  });
}

// dX += W^T * dY (per image/group), dW = sum_b dY * col^T accumulated in
// 64-bit over per-image partials so results do not depend on the worker
// count.
void conv_backward(const ConvGeom& g, const float* x, const float* w, const float* gy,
                   float* gx /*nullable*/, float* gw /*nullable*/) {
  auto& pool = global_pool();
  const size_t wsize = static_cast<size_t>(g.cout * g.col_rows);
  std::vector<std::vector<float>> gw_partial;
  if (gw) gw_partial.assign(static_cast<size_t>(g.batch), {});

  pool.parallel_for(g.batch, [&](int64_t b) {
    std::vector<float> col;
    std::vector<float> colgrad;
    if (!is_pointwise(g)) {
      col.resize(static_cast<size_t>(g.col_rows * g.out_spatial));
      if (gx) colgrad.resize(static_cast<size_t>(g.col_rows * g.out_spatial));
    }
    if (gw) gw_partial[static_cast<size_t>(b)].resize(wsize);
    for (int64_t grp = 0; grp < g.groups; ++grp) {
      const float* src = x + (b * g.cin + grp * g.cin_g) * g.in_spatial;
      ConstMatMap GY(gy + (b * g.cout + grp * g.cout_g) * g.out_spatial, g.cout_g, g.out_spatial);
      const float* colp = src;
      if (!is_pointwise(g)) {
        im2col(g, src, col.data());
        colp = col.data();
      }
      if (gw) {
        ConstMatMap C(colp, g.col_rows, g.out_spatial);
        MatMap GW(gw_partial[static_cast<size_t>(b)].data() + grp * g.cout_g * g.col_rows,
                  g.cout_g, g.col_rows);
        GW.noalias() = GY * C.transpose();
      }
      if (gx) {
        ConstMatMap W(w + grp * g.cout_g * g.col_rows, g.cout_g, g.col_rows);
        float* gx_img = gx + (b * g.cin + grp * g.cin_g) * g.in_spatial;
        if (is_pointwise(g)) {
          MatMap GX(gx_img, g.col_rows, g.out_spatial);
          GX.noalias() += W.transpose() * GY;
        } else {
          MatMap CG(colgrad.data(), g.col_rows, g.out_spatial);
          CG.noalias() = W.transpose() * GY;
          col2im_add(g, colgrad.data(), gx_img);
        }
      }
    }
  });

  if (gw) {
    std::vector<double> acc(wsize, 0.0);
    for (int64_t b = 0; b < g.batch; ++b) {
      const auto& part = gw_partial[static_cast<size_t>(b)];
      for (size_t i = 0; i < wsize; ++i) acc[i] += static_cast<double>(part[i]);
    }
    for (size_t i = 0; i < wsize; ++i) gw[i] += static_cast<float>(acc[i]);
  }
}

Tensor conv_nd(const Tensor& x, const Tensor& w, int stride, int padding, int groups, int nd,
               const char* name) {
  ConvGeom g = make_geom(x, w, stride, padding, groups, nd, name);
  Shape os;
  os.push_back(g.batch);
  os.push_back(g.cout);
  for (int i = 3 - nd; i < 3; ++i) os.push_back(g.out[i]);
  Tensor out = Tensor::zeros(os);
  conv_forward(g, x.data().data(), w.data().data(), out.data().data());
  record_node(name, out, {x, w}, [x, w, g](std::span<const float> gy) mutable {
    std::vector<float> gx, gw;
    if (x.requires_grad()) gx.assign(static_cast<size_t>(x.numel()), 0.0f);
    if (w.requires_grad()) gw.assign(static_cast<size_t>(w.numel()), 0.0f);
    conv_backward(g, x.data().data(), w.data().data(), gy.data(),
                  x.requires_grad() ? gx.data() : nullptr,
                  w.requires_grad() ? gw.data() : nullptr);
    if (x.requires_grad()) accumulate_grad(*x.impl(), gx);
    if (w.requires_grad()) accumulate_grad(*w.impl(), gw);
  });
  return out;
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, int stride, int padding, int groups) {
  return conv_nd(input, weight, stride, padding, groups, 2, "conv2d");
}

Tensor conv3d(const Tensor& input, const Tensor& weight, int stride, int padding, int groups) {
  return conv_nd(input, weight, stride, padding, groups, 3, "conv3d");
}

}  // namespace dnas
