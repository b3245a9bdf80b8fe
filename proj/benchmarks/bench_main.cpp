#include <benchmark/benchmark.h>

#include <cmath>

#include "netdemix/ddmix.hpp"
#include "netdemix/layers.hpp"
#include "netdemix/sirs.hpp"

using namespace netdemix;

namespace {

double radius_for(std::size_t n) { return 0.25 * std::cbrt(100.0 / double(n)); }

void BM_GcnForward(benchmark::State& state) {
  const auto n = std::size_t(state.range(0));
  const GraphContext ctx = make_graph_context(random_geometric_graph({n, radius_for(n), 3, 1}));
  Rng rng(2);
  Matrix h(Index(n), 20), w(20, 20);
  for (Index i = 0; i < h.size(); ++i) h.data()[i] = rng.normal();
  for (Index i = 0; i < w.size(); ++i) w.data()[i] = rng.normal();
  for (auto _ : state) {
    Tape tape;
    Var out = gcn_layer(tape.constant(ctx.operand.normalized), tape.constant(h), tape.constant(w), Activation::Relu);
    benchmark::DoNotOptimize(out.value().data());
  }
}
BENCHMARK(BM_GcnForward)->Arg(100)->Arg(250)->Arg(500);

void BM_DDmixLossBackward(benchmark::State& state) {
  const auto n = std::size_t(state.range(0));
  const Graph g = random_geometric_graph({n, radius_for(n), 3, 1});
  const GraphContext ctx = make_graph_context(g);
  const Sample s = simulate_sample(g, SIRSParams{}, 20, SourceRule{}, 3);
  ModelConfig mc;
  mc.T = 20;
  DDmix model(mc);
  Rng rng(4);
  for (auto _ : state) {
    model.params().zero_grad();
    Tape tape;
    Var loss = model.training_loss(tape, ctx, s, rng, true);
    tape.backward(loss);
    benchmark::DoNotOptimize(loss.value()(0, 0));
  }
}
BENCHMARK(BM_DDmixLossBackward)->Arg(50)->Arg(100)->Arg(250)->Unit(benchmark::kMillisecond);

void BM_Simulate(benchmark::State& state) {
  const auto n = std::size_t(state.range(0));
  const Graph g = random_geometric_graph({n, radius_for(n), 3, 1});
  std::uint64_t seed = 0;
  for (auto _ : state) {
    Sample s = simulate_sample(g, SIRSParams{}, 20, SourceRule{}, seed++);
    benchmark::DoNotOptimize(s.obs.x.data());
  }
}
BENCHMARK(BM_Simulate)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
