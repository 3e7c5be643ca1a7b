#include <benchmark/benchmark.h>

#include "nervus/eval/losses.hpp"
#include "nervus/grad/ops.hpp"
#include "nervus/grad/tape.hpp"
#include "nervus/random.hpp"

using nervus::Rng;
using nervus::grad::Shape;
using nervus::grad::Tape;
using nervus::grad::Tensor;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, bool requires_grad = false) {
  std::vector<float> values(nervus::grad::numel_of(shape));
  for (float& v : values) v = static_cast<float>(rng.normal());
  return Tensor(std::move(shape), std::move(values), requires_grad);
}

void BM_Conv2dForwardBackward(benchmark::State& state) {
  const auto channels = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  Tensor x = random_tensor({32, channels, 16, 16}, rng);
  Tensor w = random_tensor({2 * channels, channels, 3, 3}, rng, true);
  Tensor b = random_tensor({2 * channels}, rng, true);
  for (auto _ : state) {
    Tape tape;
    Tensor loss = nervus::grad::sum(tape, nervus::grad::conv2d(tape, x, w, b, 1, 1));
    tape.backward(loss);
    benchmark::DoNotOptimize(w.grad().data());
  }
}
BENCHMARK(BM_Conv2dForwardBackward)->Arg(1)->Arg(8)->Arg(16);

void BM_LinearForwardBackward(benchmark::State& state) {
  const auto width = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  Tensor x = random_tensor({32, width}, rng);
  Tensor w = random_tensor({width, width}, rng, true);
  Tensor b = random_tensor({width}, rng, true);
  for (auto _ : state) {
    Tape tape;
    Tensor loss = nervus::grad::sum(tape, nervus::grad::linear(tape, x, w, b));
    tape.backward(loss);
    benchmark::DoNotOptimize(w.grad().data());
  }
}
BENCHMARK(BM_LinearForwardBackward)->Arg(64)->Arg(256);

void BM_CoxNpll(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  Tensor risk = random_tensor({n, 1}, rng, true);
  std::vector<int> events(n);
  std::vector<double> periods(n);
  for (std::size_t i = 0; i < n; ++i) {
    events[i] = rng.bernoulli(0.7) ? 1 : 0;
    periods[i] = 1.0 + static_cast<double>(rng.below(50));
  }
  events[0] = 1;
  for (auto _ : state) {
    Tape tape;
    Tensor loss = nervus::loss::cox_npll(tape, risk, events, periods);
    tape.backward(loss);
    benchmark::DoNotOptimize(risk.grad().data());
  }
}
BENCHMARK(BM_CoxNpll)->Arg(32)->Arg(1024);

}  // namespace

BENCHMARK_MAIN();
