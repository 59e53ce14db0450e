#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

#include "dnas/analyze.hpp"

namespace dnas {

namespace {

std::string fmt_m(int64_t params) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << static_cast<double>(params) / 1e6 << "M";
  return os.str();
}

std::string fmt_g(int64_t macs) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << static_cast<double>(macs) / 1e9 << " G";
  return os.str();
}

std::string shape_list(const std::vector<int64_t>& dims) {
  std::string s;
  for (size_t i = 0; i < dims.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(dims[i]);
  }
  return s;
}

}  // namespace

std::string CountReport::params_pretty() const { return fmt_m(total_params); }
std::string CountReport::macs_pretty() const { return fmt_g(total_macs); }

std::string CountReport::to_table() const {
  size_t wl = 5, wk = 4, wo = 6;
  for (const auto& r : rows) {
    wl = std::max(wl, r.layer.size());
    wk = std::max(wk, r.kind.size());
    wo = std::max(wo, r.output_shape.size());
  }
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(wl)) << "layer" << "  "
     << std::setw(static_cast<int>(wk)) << "kind" << "  " << std::right << std::setw(12) << "params"
     << "  " << std::setw(14) << "macs" << "  " << std::left << "output" << "\n";
  for (const auto& r : rows) {
    os << std::left << std::setw(static_cast<int>(wl)) << r.layer << "  "
       << std::setw(static_cast<int>(wk)) << r.kind << "  " << std::right << std::setw(12)
       << r.params << "  " << std::setw(14) << r.macs << "  " << std::left << r.output_shape
       << "\n";
  }
  os << std::left << std::setw(static_cast<int>(wl)) << "total" << "  "
     << std::setw(static_cast<int>(wk)) << "" << "  " << std::right << std::setw(12) << total_params
     << "  " << std::setw(14) << total_macs << "\n";
  os << "params: " << total_params << " (" << params_pretty() << ")\n";
  os << "macs: " << total_macs << " (" << macs_pretty() << ")\n";
  return os.str();
}

std::string CountReport::to_records() const {
  std::ostringstream os;
  for (const auto& r : rows) {
    os << "layer=" << r.layer << " kind=\"" << r.kind << "\" params=" << r.params
       << " macs=" << r.macs;
    if (!r.output_shape.empty()) os << " output=" << r.output_shape;
    os << "\n";
  }
  os << "total params=" << total_params << " macs=" << total_macs << "\n";
  return os.str();
}

namespace {

// Walks the architecture layer by layer. When input_spatial is empty only
// parameters are filled in; otherwise MACs and output shapes too.
CountReport walk(const ArchitectureSpec& arch, std::vector<int64_t> spatial,
                 const MacOptions& opts) {
  validate_architecture(arch);
  const int nd = arch.dim == Dimensionality::d2 ? 2 : 3;
  const bool with_macs = !spatial.empty();
  if (with_macs) {
    check_input(static_cast<int>(spatial.size()) == nd,
                "count_macs: input must have " + std::to_string(nd) + " spatial extents");
    for (int64_t e : spatial)
      check_input(e % 16 == 0, "count_macs: spatial extents must be divisible by 16");
  }

  CountReport rep;
  int64_t in_ch = arch.input_channels;
  int64_t positions = 1;
  for (int64_t e : spatial) positions *= e;

  for (size_t b = 0; b < arch.blocks.size(); ++b) {
    const auto& blk = arch.blocks[b];
    const std::string bp = "block" + std::to_string(b + 1);
    for (size_t l = 0; l < blk.pyconv.levels.size(); ++l) {
      const auto& f = blk.pyconv.levels[l];
      int64_t kvol = 1;
      std::string kdesc;
      for (int d = 0; d < nd; ++d) {
        kvol *= f.kernel;
        kdesc += (d ? "x" : "") + std::to_string(f.kernel);
      }
      CountRow row;
      row.layer = bp + ".pyconv.level" + std::to_string(l);
      row.kind = std::string("conv") + std::to_string(nd) + "d " + kdesc + " g" +
                 std::to_string(f.groups);
      row.params = kvol * (in_ch / f.groups) * f.out_channels;
      if (with_macs) {
        row.macs = row.params * positions;
        std::vector<int64_t> od{f.out_channels};
        od.insert(od.end(), spatial.begin(), spatial.end());
        row.output_shape = shape_list(od);
      }
      rep.rows.push_back(std::move(row));
    }
    const int64_t out_ch = blk.pyconv.out_channels();
    CountRow bn;
    bn.layer = bp + ".bn";
    bn.kind = "batch_norm";
    bn.params = 2 * out_ch;
    if (with_macs) {
      if (opts.include_aux) bn.macs = 2 * out_ch * positions;
      std::vector<int64_t> od{out_ch};
      od.insert(od.end(), spatial.begin(), spatial.end());
      bn.output_shape = shape_list(od);
    }
    rep.rows.push_back(std::move(bn));
    if (with_macs && opts.include_aux) {
      CountRow act;
      act.layer = bp + ".relu";
      act.kind = "relu";
      act.macs = out_ch * positions;
      rep.rows.push_back(std::move(act));
    }
    if (with_macs) {
      for (auto& e : spatial) {
        check_input(e % 2 == 0, "count_macs: spatial extent not divisible at block " + bp);
        e /= 2;
      }
      positions = 1;
      for (int64_t e : spatial) positions *= e;
      if (opts.include_aux) {
        CountRow pool;
        pool.layer = bp + ".pool";
        pool.kind = blk.pool == PoolKind::max ? "max_pool" : "avg_pool";
        pool.macs = out_ch * positions * (int64_t)std::llround(std::pow(2.0, nd));
        std::vector<int64_t> od{out_ch};
        od.insert(od.end(), spatial.begin(), spatial.end());
        pool.output_shape = shape_list(od);
        rep.rows.push_back(std::move(pool));
      }
    }
    in_ch = out_ch;
  }

  CountRow fc;
  fc.layer = "head.fc";
  fc.kind = "fully_connected";
  fc.params = in_ch * arch.num_classes + arch.num_classes;
  if (with_macs) {
    fc.macs = in_ch * arch.num_classes;
    fc.output_shape = shape_list({arch.num_classes});
  }
  rep.rows.push_back(std::move(fc));

  for (const auto& r : rep.rows) {
    rep.total_params += r.params;
    rep.total_macs += r.macs;
  }
  if (opts.flops_2x) {
    for (auto& r : rep.rows) r.macs *= 2;
    rep.total_macs *= 2;
  }
  return rep;
}

}  // namespace

CountReport count_params(const ArchitectureSpec& arch) { return walk(arch, {}, {}); }

CountReport count_macs(const ArchitectureSpec& arch, const std::vector<int64_t>& input_spatial,
                       const MacOptions& opts) {
  return walk(arch, input_spatial, opts);
}

LatencyStats benchmark_latency(const std::function<Tensor(const Tensor&)>& forward,
                               const Shape& input_shape, int64_t batch, int64_t repeats,
                               int64_t warmup) {
  check_input(repeats >= 1, "benchmark_latency: repeats must be >= 1");
  Shape full{batch};
  full.insert(full.end(), input_shape.begin(), input_shape.end());
  std::mt19937 rng(12345);
  Tensor input = Tensor::uniform(full, rng, 0.0f, 1.0f);

  NoGradGuard ng;
  for (int64_t i = 0; i < warmup; ++i) forward(input);

  std::vector<double> ms(static_cast<size_t>(repeats));
  for (int64_t i = 0; i < repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    forward(input);
    const auto t1 = std::chrono::steady_clock::now();
    ms[static_cast<size_t>(i)] = std::chrono::duration<double, std::milli>(t1 - t0).count();
  }
  std::sort(ms.begin(), ms.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(ms.size() - 1);
    const size_t lo = static_cast<size_t>(pos);
    const size_t hi = std::min(lo + 1, ms.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return ms[lo] * (1.0 - frac) + ms[hi] * frac;
  };
  LatencyStats st;
  st.repeats = repeats;
  st.median_ms = quantile(0.5);
  st.iqr_ms = quantile(0.75) - quantile(0.25);
  st.min_ms = ms.front();
  double total = 0.0;
  for (double v : ms) total += v;
  st.mean_ms = total / static_cast<double>(repeats);
  st.images_per_s = st.median_ms > 0.0 ? 1000.0 * static_cast<double>(batch) / st.median_ms : 0.0;
  return st;
}

}  // namespace dnas
