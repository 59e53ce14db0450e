#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dnas/arch.hpp"
#include "dnas/tensor.hpp"

namespace dnas {

struct CountRow {
  std::string layer;        // e.g. "block2.pyconv.level0"
  std::string kind;         // e.g. "conv2d 9x9 g1"
  int64_t params = 0;
  int64_t macs = 0;
  std::string output_shape; // empty when no input shape was given
};

struct CountReport {
  std::vector<CountRow> rows;
  int64_t total_params = 0;
  int64_t total_macs = 0;

  // e.g. "0.42M" / "2.2399 G"
  std::string params_pretty() const;
  std::string macs_pretty() const;
  std::string to_table() const;
  // One `layer key=value ...` record per line.
  std::string to_records() const;
};

struct MacOptions {
  // Count batch norm, pooling and activations too (2 ops per normalized
  // element, window-size ops per pooled output, 1 op per activation).
  bool include_aux = false;
  // Report FLOPs as 2*MACs instead of 1 MAC = 1 FLOP.
  bool flops_2x = false;
};

// Parameter counts: conv k^d * (Cin/g) * Cout (no bias), BN 2*C (running
// stats excluded), FC Din*Dout + Dout.
CountReport count_params(const ArchitectureSpec& arch);

// MAC counts at a given input shape (spatial extents only, e.g. {224,224}
// or {16,112,112}); conv MACs = weight params * output positions, FC MACs
// = Din*Dout, BN/pool/activation excluded unless opts.include_aux.
CountReport count_macs(const ArchitectureSpec& arch, const std::vector<int64_t>& input_spatial,
                       const MacOptions& opts = {});

struct LatencyStats {
  int64_t repeats = 0;
  double median_ms = 0.0;
  double iqr_ms = 0.0;       // p75 - p25
  double min_ms = 0.0;
  double mean_ms = 0.0;
  double images_per_s = 0.0;
};

// Median/IQR wall time of eval-mode forward passes after warmup.
LatencyStats benchmark_latency(const std::function<Tensor(const Tensor&)>& forward,
                               const Shape& input_shape, int64_t batch, int64_t repeats,
                               int64_t warmup = 3);

}  // namespace dnas
