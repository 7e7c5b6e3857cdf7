#include <benchmark/benchmark.h>

#include "dgn/corpus.hpp"
#include "dgn/graph.hpp"
#include "dgn/iodp.hpp"
#include "dgn/model.hpp"
#include "dgn/nn.hpp"

namespace {

dgn::SyntheticCorpora corpus(std::uint32_t per_scene, std::uint32_t cells) {
  dgn::SyntheticSpec spec;
  spec.train_per_scene = per_scene;
  spec.test_per_scene = 1;
  spec.cells_per_side = cells;
  return dgn::generate_synthetic_corpus(spec);
}

void BM_BuildPrototype(benchmark::State& state) {
  const auto data = corpus(static_cast<std::uint32_t>(state.range(0)), 4);
  for (auto _ : state) {
    auto p = dgn::build_prototype(data.train, dgn::CooccurrenceMode::Independent, {});
    benchmark::DoNotOptimize(p.omega.values().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(data.train.size()));
}
BENCHMARK(BM_BuildPrototype)->Arg(10)->Arg(100);

void BM_BuildGraphAndPropagate(benchmark::State& state) {
  const auto data = corpus(2, static_cast<std::uint32_t>(state.range(0)));
  const auto proto = dgn::build_prototype(data.train, dgn::CooccurrenceMode::Independent, {});
  const auto& inst = data.train.instances()[0];
  for (auto _ : state) {
    const auto g = dgn::build_graph(inst, proto);
    auto out = dgn::propagate(g.adjacency, g.nodes.features);
    benchmark::DoNotOptimize(out.values().data());
  }
  state.counters["nodes"] = static_cast<double>(inst.feature_map->pixel_count());
}
BENCHMARK(BM_BuildGraphAndPropagate)->Arg(4)->Arg(8)->Arg(16);

void BM_TrainEpoch(benchmark::State& state) {
  const auto data = corpus(20, 4);
  const auto proto = dgn::build_prototype(data.train, dgn::CooccurrenceMode::Independent, {});
  dgn::TrainConfig config;
  config.epochs = 1;
  config.mode = static_cast<dgn::AblationMode>(state.range(0));
  const dgn::Prototype* p = config.mode == dgn::AblationMode::Baseline ? nullptr : &proto;
  for (auto _ : state) {
    auto r = dgn::train(data.train, p, config);
    benchmark::DoNotOptimize(r.model.main_head.bias.data());
  }
  state.SetLabel(std::string(dgn::to_string(config.mode)));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(data.train.size()));
}
BENCHMARK(BM_TrainEpoch)->Arg(0)->Arg(3)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
