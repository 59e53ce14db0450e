#pragma once

// Naive 64-bit reference implementations used as independent oracles for
// the tensor kernels. Loop nests only, no im2col, no BLAS: these must stay
// structurally unrelated to the production path they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace ref {

using Vec = std::vector<double>;

// x[B,Cin,H,W] (row-major), w[Cout,Cin/g,k,k] -> y[B,Cout,OH,OW]
inline Vec conv2d(const Vec& x, int64_t B, int64_t Cin, int64_t H, int64_t W, const Vec& w,
                  int64_t Cout, int64_t k, int64_t stride, int64_t pad, int64_t groups) {
  const int64_t OH = (H + 2 * pad - k) / stride + 1;
  const int64_t OW = (W + 2 * pad - k) / stride + 1;
  const int64_t cin_g = Cin / groups, cout_g = Cout / groups;
  Vec y(static_cast<size_t>(B * Cout * OH * OW), 0.0);
  for (int64_t b = 0; b < B; ++b)
    for (int64_t co = 0; co < Cout; ++co) {
      const int64_t g = co / cout_g;
      for (int64_t oh = 0; oh < OH; ++oh)
        for (int64_t ow = 0; ow < OW; ++ow) {
          double acc = 0.0;
          for (int64_t ci = 0; ci < cin_g; ++ci)
            for (int64_t kr = 0; kr < k; ++kr)
              for (int64_t kc = 0; kc < k; ++kc) {
                const int64_t ih = oh * stride - pad + kr;
                const int64_t iw = ow * stride - pad + kc;
                if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                acc += x[((b * Cin + g * cin_g + ci) * H + ih) * W + iw] *
                       w[((co * cin_g + ci) * k + kr) * k + kc];
              }
          y[((b * Cout + co) * OH + oh) * OW + ow] = acc;
        }
    }
  return y;
}

// x[B,Cin,T,H,W], w[Cout,Cin/g,k,k,k]
inline Vec conv3d(const Vec& x, int64_t B, int64_t Cin, int64_t T, int64_t H, int64_t W,
                  const Vec& w, int64_t Cout, int64_t k, int64_t stride, int64_t pad,
                  int64_t groups) {
  const int64_t OT = (T + 2 * pad - k) / stride + 1;
  const int64_t OH = (H + 2 * pad - k) / stride + 1;
  const int64_t OW = (W + 2 * pad - k) / stride + 1;
  const int64_t cin_g = Cin / groups, cout_g = Cout / groups;
  Vec y(static_cast<size_t>(B * Cout * OT * OH * OW), 0.0);
  for (int64_t b = 0; b < B; ++b)
    for (int64_t co = 0; co < Cout; ++co) {
      const int64_t g = co / cout_g;
      for (int64_t ot = 0; ot < OT; ++ot)
        for (int64_t oh = 0; oh < OH; ++oh)
          for (int64_t ow = 0; ow < OW; ++ow) {
            double acc = 0.0;
            for (int64_t ci = 0; ci < cin_g; ++ci)
              for (int64_t kt = 0; kt < k; ++kt)
                for (int64_t kr = 0; kr < k; ++kr)
                  for (int64_t kc = 0; kc < k; ++kc) {
                    const int64_t it = ot * stride - pad + kt;
                    const int64_t ih = oh * stride - pad + kr;
                    const int64_t iw = ow * stride - pad + kc;
                    if (it < 0 || it >= T || ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                    acc += x[(((b * Cin + g * cin_g + ci) * T + it) * H + ih) * W + iw] *
                           w[(((co * cin_g + ci) * k + kt) * k + kr) * k + kc];
                  }
            y[(((b * Cout + co) * OT + ot) * OH + oh) * OW + ow] = acc;
          }
    }
  return y;
}

// Train-mode batch norm over dims != 1; biased variance, matching the
// production normalization. x is [B,C,spatial].
inline Vec batch_norm_train(const Vec& x, int64_t B, int64_t C, int64_t spatial, const Vec& gamma,
                            const Vec& beta, double eps) {
  Vec y(x.size());
  const int64_t n = B * spatial;
  for (int64_t c = 0; c < C; ++c) {
    double s = 0.0, s2 = 0.0;
    for (int64_t b = 0; b < B; ++b)
      for (int64_t i = 0; i < spatial; ++i) {
        const double v = x[(b * C + c) * spatial + i];
        s += v;
        s2 += v * v;
      }
    const double m = s / n;
    const double var = std::max(0.0, s2 / n - m * m);
    const double istd = 1.0 / std::sqrt(var + eps);
    for (int64_t b = 0; b < B; ++b)
      for (int64_t i = 0; i < spatial; ++i) {
        const size_t at = static_cast<size_t>((b * C + c) * spatial + i);
        y[at] = gamma[static_cast<size_t>(c)] * (x[at] - m) * istd + beta[static_cast<size_t>(c)];
      }
  }
  return y;
}

inline Vec batch_norm_eval(const Vec& x, int64_t B, int64_t C, int64_t spatial, const Vec& gamma,
                           const Vec& beta, const Vec& rmean, const Vec& rvar, double eps) {
  Vec y(x.size());
  for (int64_t c = 0; c < C; ++c) {
    const double istd = 1.0 / std::sqrt(rvar[static_cast<size_t>(c)] + eps);
    for (int64_t b = 0; b < B; ++b)
      for (int64_t i = 0; i < spatial; ++i) {
        const size_t at = static_cast<size_t>((b * C + c) * spatial + i);
        y[at] = gamma[static_cast<size_t>(c)] * (x[at] - rmean[static_cast<size_t>(c)]) * istd +
                beta[static_cast<size_t>(c)];
      }
  }
  return y;
}

inline Vec relu(const Vec& x) {
  Vec y(x.size());
  for (size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  return y;
}

inline Vec max_pool2d(const Vec& x, int64_t B, int64_t C, int64_t H, int64_t W, int64_t window,
                      int64_t stride) {
  const int64_t OH = (H - window) / stride + 1, OW = (W - window) / stride + 1;
  Vec y(static_cast<size_t>(B * C * OH * OW));
  for (int64_t p = 0; p < B * C; ++p)
    for (int64_t oh = 0; oh < OH; ++oh)
      for (int64_t ow = 0; ow < OW; ++ow) {
        double best = -1e300;
        for (int64_t dh = 0; dh < window; ++dh)
          for (int64_t dw = 0; dw < window; ++dw)
            best = std::max(best, x[(p * H + oh * stride + dh) * W + ow * stride + dw]);
        y[(p * OH + oh) * OW + ow] = best;
      }
  return y;
}

inline Vec avg_pool2d(const Vec& x, int64_t B, int64_t C, int64_t H, int64_t W, int64_t window,
                      int64_t stride) {
  const int64_t OH = (H - window) / stride + 1, OW = (W - window) / stride + 1;
  Vec y(static_cast<size_t>(B * C * OH * OW));
  for (int64_t p = 0; p < B * C; ++p)
    for (int64_t oh = 0; oh < OH; ++oh)
      for (int64_t ow = 0; ow < OW; ++ow) {
        double acc = 0.0;
        for (int64_t dh = 0; dh < window; ++dh)
          for (int64_t dw = 0; dw < window; ++dw)
            acc += x[(p * H + oh * stride + dh) * W + ow * stride + dw];
        y[(p * OH + oh) * OW + ow] = acc / (window * window);
      }
  return y;
}

inline Vec global_avg_pool(const Vec& x, int64_t planes, int64_t spatial) {
  Vec y(static_cast<size_t>(planes));
  for (int64_t p = 0; p < planes; ++p) {
    double acc = 0.0;
    for (int64_t i = 0; i < spatial; ++i) acc += x[p * spatial + i];
    y[static_cast<size_t>(p)] = acc / spatial;
  }
  return y;
}

inline Vec global_max_pool(const Vec& x, int64_t planes, int64_t spatial) {
  Vec y(static_cast<size_t>(planes));
  for (int64_t p = 0; p < planes; ++p) {
    double best = x[p * spatial];
    for (int64_t i = 1; i < spatial; ++i) best = std::max(best, x[p * spatial + i]);
    y[static_cast<size_t>(p)] = best;
  }
  return y;
}

// x[B,Din], w[Din,Dout], b[Dout]
inline Vec fully_connected(const Vec& x, int64_t B, int64_t din, const Vec& w, int64_t dout,
                           const Vec& bias) {
  Vec y(static_cast<size_t>(B * dout));
  for (int64_t b = 0; b < B; ++b)
    for (int64_t j = 0; j < dout; ++j) {
      double acc = bias[static_cast<size_t>(j)];
      for (int64_t i = 0; i < din; ++i) acc += x[b * din + i] * w[i * dout + j];
      y[b * dout + j] = acc;
    }
  return y;
}

inline Vec softmax_rows(const Vec& x, int64_t rows, int64_t cols) {
  Vec y(x.size());
  for (int64_t r = 0; r < rows; ++r) {
    double mx = x[r * cols];
    for (int64_t c = 1; c < cols; ++c) mx = std::max(mx, x[r * cols + c]);
    double denom = 0.0;
    for (int64_t c = 0; c < cols; ++c) denom += std::exp(x[r * cols + c] - mx);
    for (int64_t c = 0; c < cols; ++c) y[r * cols + c] = std::exp(x[r * cols + c] - mx) / denom;
  }
  return y;
}

inline double cross_entropy(const Vec& p, const Vec& onehot, int64_t B, int64_t K) {
  double acc = 0.0;
  for (int64_t i = 0; i < B * K; ++i)
    if (onehot[static_cast<size_t>(i)] == 1.0)
      acc -= std::log(std::max(p[static_cast<size_t>(i)], 1e-12));
  return acc / B;
}

inline double mse(const Vec& p, const Vec& q) {
  double acc = 0.0;
  for (size_t i = 0; i < p.size(); ++i) acc += (p[i] - q[i]) * (p[i] - q[i]);
  return acc / static_cast<double>(p.size());
}

inline Vec concat_channels(const std::vector<Vec>& parts, const std::vector<int64_t>& channels,
                           int64_t B, int64_t spatial) {
  int64_t total = 0;
  for (int64_t c : channels) total += c;
  Vec y(static_cast<size_t>(B * total * spatial));
  for (int64_t b = 0; b < B; ++b) {
    int64_t off = 0;
    for (size_t part = 0; part < parts.size(); ++part) {
      const int64_t c = channels[part];
      std::copy(parts[part].begin() + b * c * spatial, parts[part].begin() + (b + 1) * c * spatial,
                y.begin() + (b * total + off) * spatial);
      off += c;
    }
  }
  return y;
}

}  // namespace ref
