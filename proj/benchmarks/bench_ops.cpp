#include <benchmark/benchmark.h>

#include <random>

#include "dnas/layers.hpp"
#include "dnas/losses.hpp"
#include "dnas/optim.hpp"

using namespace dnas;

namespace {

Tensor random_input(Shape shape, uint32_t seed) {
  std::mt19937 rng(seed);
  return Tensor::uniform(std::move(shape), rng, 0.0f, 1.0f);
}

void BM_Conv2dForward(benchmark::State& state) {
  // Heaviest student layer: 9x9, 32->32 channels at 32x32 spatial.
  std::mt19937 rng(1);
  Tensor x = random_input({static_cast<int64_t>(state.range(0)), 32, 32, 32}, 2);
  Tensor w = Tensor::randn({32, 32, 9, 9}, rng, 0.05f);
  NoGradGuard ng;
  for (auto _ : state) {
    benchmark::DoNotOptimize(conv2d(x, w, 1, 4, 1));
  }
  const double macs = 2.0 * 81 * 32 * 32 * 32 * 32 * state.range(0);
  state.counters["GFLOP/s"] =
      benchmark::Counter(macs, benchmark::Counter::kIsIterationInvariantRate,
                         benchmark::Counter::kIs1000) ;
}
BENCHMARK(BM_Conv2dForward)->Arg(1)->Arg(8)->Arg(32);

void BM_StudentForward(benchmark::State& state) {
  std::mt19937 rng(3);
  StudentNet net(reference_student(8, 3), rng);
  Tensor x = random_input({state.range(0), 3, 64, 64}, 4);
  NoGradGuard ng;
  for (auto _ : state) {
    benchmark::DoNotOptimize(net.predict(x, false));
  }
  state.counters["img/s"] = benchmark::Counter(
      static_cast<double>(state.range(0)), benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_StudentForward)->Arg(1)->Arg(32);

void BM_StudentTrainStep(benchmark::State& state) {
  std::mt19937 rng(5);
  StudentNet net(reference_student(8, 3), rng);
  Sgd opt(0.002f, 0.9f, 5e-4f);
  Tensor x = random_input({32, 3, 64, 64}, 6);
  Tensor y = Tensor::zeros({32, 8});
  for (int64_t b = 0; b < 32; ++b) y.data()[b * 8 + b % 8] = 1.0f;
  auto params = net.parameters();
  for (auto _ : state) {
    Tensor loss = cross_entropy(net.predict(x, true), y);
    loss.backward();
    opt.step(params);
  }
  state.counters["img/s"] =
      benchmark::Counter(32.0, benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_StudentTrainStep);

void BM_SupernetForward(benchmark::State& state) {
  std::mt19937 rng(7);
  SuperNet net(reference_candidate_space(), 8, 3, rng);
  Tensor x = random_input({8, 3, 64, 64}, 8);
  NoGradGuard ng;
  for (auto _ : state) {
    benchmark::DoNotOptimize(net.predict(x, false));
  }
  state.counters["img/s"] =
      benchmark::Counter(8.0, benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_SupernetForward);

void BM_TeacherProgressiveBatch(benchmark::State& state) {
  PlainBackboneConfig bb;
  bb.channels = {64, 128, 256};
  TeacherConfig tc;
  tc.descriptor_len = 128;
  tc.num_classes = 8;
  std::mt19937 rng(9);
  TeacherNet teacher = build_teacher(bb, tc, rng);
  Sgd opt(0.002f, 0.9f, 5e-4f);
  auto params = teacher.parameters();
  Tensor x = random_input({32, 3, 64, 64}, 10);
  Tensor y = Tensor::zeros({32, 8});
  for (int64_t b = 0; b < 32; ++b) y.data()[b * 8 + b % 8] = 1.0f;
  std::mt19937 brng(11);
  for (auto _ : state) {
    for (int64_t n = 0; n < teacher.num_stages(); ++n) {
      Tensor xa = brightness_augment(x, 0.5f, 1.5f, brng);
      Tensor loss = cross_entropy(
          teacher.stage_prediction(teacher.stage_descriptor_value(xa, n, true), n, true), y);
      loss.backward();
      opt.step(params);
    }
    Tensor loss = cross_entropy(teacher.predict(x, true), y);
    loss.backward();
    opt.step(params);
  }
  state.counters["img/s"] =
      benchmark::Counter(32.0, benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_TeacherProgressiveBatch);

}  // namespace

BENCHMARK_MAIN();
