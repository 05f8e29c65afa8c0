#include <benchmark/benchmark.h>

#include <vector>

#include "pinnrc/circuits.hpp"
#include "pinnrc/net.hpp"
#include "pinnrc/training.hpp"

using namespace pinnrc;

namespace {

std::vector<double> inputs(int n) {
  return scale_times(TimeDomain{10.0}, sample_collocation(TimeDomain{10.0}, n));
}

void BM_ForwardTangent(benchmark::State& state) {
  const Mlp net = Mlp::init(default_layer_sizes(), 1);
  const auto xs = inputs(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(forward_tangent(net, xs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardTangent)->Arg(35)->Arg(350)->Arg(1050);

void BM_Backward(benchmark::State& state) {
  const Mlp net = Mlp::init(default_layer_sizes(), 1);
  const auto xs = inputs(static_cast<int>(state.range(0)));
  const TangentEval ev = forward_tangent(net, xs);
  const Eigen::MatrixXd seed = Eigen::MatrixXd::Ones(1, ev.batch());
  for (auto _ : state) benchmark::DoNotOptimize(backward(net, ev, seed, seed));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Backward)->Arg(35)->Arg(350)->Arg(1050);

// One full training step's worth of loss work plus the Adam update.
void BM_TrainStep(benchmark::State& state) {
  Mlp net = Mlp::init(default_layer_sizes(), 1);
  const CircuitCase c = CircuitCase::case1();
  const TimeDomain dom{10.0};
  const auto pts = sample_collocation(dom, static_cast<int>(state.range(0)));
  AdamState adam(static_cast<Eigen::Index>(net.size()));
  for (auto _ : state) {
    LossTerm pde = pde_loss(net, c, dom, pts, Formulation::log);
    pde.grad += ic_loss(net, c, dom, Formulation::log).grad;
    adam_step(net.values(), pde.grad.values(), adam, 1e-3);
  }
}
BENCHMARK(BM_TrainStep)->Arg(35)->Arg(350)->Arg(1050);

}  // namespace

BENCHMARK_MAIN();
