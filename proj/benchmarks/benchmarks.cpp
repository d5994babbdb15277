#include <benchmark/benchmark.h>

#include <random>

#include "genreg/genreg.hpp"

using namespace genreg;

namespace {

Tensor uniform(Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = u(rng);
  return t;
}

void BM_Conv2dForwardBackward(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  const Tensor x = uniform({batch, 16, 16, 16}, 1);
  const Tensor w = uniform({32, 16, 3, 3}, 2);
  const Tensor b = uniform({32}, 3);
  for (auto _ : state) {
    Tape tape;
    Var xv = tape.leaf(x), wv = tape.leaf(w), bv = tape.leaf(b);
    Var y = conv2d(xv, wv, bv, 2, 1);
    tape.backward(sum(y));
    benchmark::DoNotOptimize(tape.grad(wv));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}
BENCHMARK(BM_Conv2dForwardBackward)->Arg(1)->Arg(16)->Arg(64);

void BM_ConvTranspose2dForwardBackward(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  const Tensor x = uniform({batch, 32, 8, 8}, 1);
  const Tensor w = uniform({32, 16, 4, 4}, 2);
  for (auto _ : state) {
    Tape tape;
    Var xv = tape.leaf(x), wv = tape.leaf(w);
    Var y = conv_transpose2d(xv, wv, std::nullopt, 2, 1, 16, 16);
    tape.backward(sum(y));
    benchmark::DoNotOptimize(tape.grad(wv));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}
BENCHMARK(BM_ConvTranspose2dForwardBackward)->Arg(1)->Arg(16)->Arg(64);

void BM_GeneratorVjp(benchmark::State& state) {
  const auto size = static_cast<std::size_t>(state.range(0));
  const GenerativeModel m =
      create_model(ModelKind::Variational, desk_architecture(size, 10, ModelKind::Variational), 1);
  const Tensor z = uniform({10}, 4);
  const Tensor c = uniform({size, size}, 5);
  for (auto _ : state) {
    auto lin = m.generator.linearize(z);
    benchmark::DoNotOptimize(lin.vjp(c));
  }
}
BENCHMARK(BM_GeneratorVjp)->Arg(32)->Arg(64);

void BM_RadonApply(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const RadonOperator op(n);
  const Tensor x = uniform({n, n}, 6);
  for (auto _ : state) benchmark::DoNotOptimize(op.apply(x));
}
BENCHMARK(BM_RadonApply)->Arg(32)->Arg(64)->Arg(128);

void BM_RadonAdjoint(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const RadonOperator op(n);
  const Tensor y = uniform(op.output_shape(), 7);
  for (auto _ : state) benchmark::DoNotOptimize(op.adjoint(y));
}
BENCHMARK(BM_RadonAdjoint)->Arg(32)->Arg(64)->Arg(128);

void BM_RadonConstruction(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    RadonOperator op(n);
    benchmark::DoNotOptimize(op.nonzeros());
  }
}
BENCHMARK(BM_RadonConstruction)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Hungarian(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd cost(n, n);
  for (Eigen::Index i = 0; i < cost.size(); ++i) cost.data()[i] = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(solve_assignment(cost).cost);
  state.SetComplexityN(n);
}
BENCHMARK(BM_Hungarian)->RangeMultiplier(2)->Range(32, 512)->Unit(benchmark::kMillisecond)->Complexity(benchmark::oNCubed);

void BM_TvProx(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor y = uniform({n, n}, 9);
  for (auto _ : state) benchmark::DoNotOptimize(tv_prox(y, 0.1, 100).x);
}
BENCHMARK(BM_TvProx)->Arg(32)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
