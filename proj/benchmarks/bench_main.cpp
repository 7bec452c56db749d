#include <vector>

#include <benchmark/benchmark.h>

#include "deepls/loss.hpp"
#include "deepls/net.hpp"
#include "deepls/problems.hpp"
#include "deepls/quad.hpp"

using namespace deepls;

namespace {

TwoBranchNet poisson_net(Activation act) {
  return init_network(Architecture::symmetric({24, 14, 14, 1}), act, 1);
}

void BM_Forward(benchmark::State& state) {
  const TwoBranchNet net = poisson_net(Activation::Sigmoid);
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::vector<double> xs = uniform_partition(0.0, 1.0, n).midpoints();
  std::vector<double> out(n);
  for (auto _ : state) {
    net.evaluate(Branch::Upper, xs, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_Forward)->Arg(200)->Arg(800)->Arg(2000);

void BM_FoslsGradient(benchmark::State& state) {
  const TwoBranchNet net = poisson_net(state.range(1) ? Activation::Sigmoid : Activation::LeakyReLU);
  const ProblemSpec p = poisson_problem();
  const DiscreteLoss loss(p, uniform_partition(0.0, 1.0, static_cast<std::size_t>(state.range(0))), LossSpec{});
  const SampledObjective obj = loss.objective();
  GradientWorkspace ws;
  std::vector<double> grad(net.param_count());
  for (auto _ : state) {
    benchmark::DoNotOptimize(param_gradient(obj, net, grad, &ws));
  }
}
BENCHMARK(BM_FoslsGradient)->Args({200, 1})->Args({800, 0})->Args({2000, 1});

void BM_LsGradient(benchmark::State& state) {
  const TwoBranchNet net = poisson_net(Activation::Sigmoid);
  const ProblemSpec p = poisson_problem();
  const DiscreteLoss loss(p, uniform_partition(0.0, 1.0, 200), LossSpec{LossKind::LS});
  const SampledObjective obj = loss.objective();
  GradientWorkspace ws;
  std::vector<double> grad(net.param_count());
  for (auto _ : state) {
    benchmark::DoNotOptimize(param_gradient(obj, net, grad, &ws));
  }
}
BENCHMARK(BM_LsGradient);

void BM_LocalRefine(benchmark::State& state) {
  const Partition p = uniform_partition(0.0, 1.0, static_cast<std::size_t>(state.range(0)));
  std::vector<double> eta(p.size());
  for (std::size_t i = 0; i < eta.size(); ++i) eta[i] = static_cast<double>((i * 7919) % 1000);
  for (auto _ : state) {
    benchmark::DoNotOptimize(refine_local(p, eta, 0.1).size());
  }
}
BENCHMARK(BM_LocalRefine)->Arg(200)->Arg(20000);

}  // namespace
BENCHMARK_MAIN();
