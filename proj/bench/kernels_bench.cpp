#include <benchmark/benchmark.h>

#include <numeric>
#include <string>

#include "rwb/flow.hpp"
#include "rwb/model.hpp"
#include "rwb/oracle.hpp"

using namespace rwb;

namespace {

ModelInstance instance(const std::string& name) {
  return instantiate(load_model(std::string(RWB_MODELS_DIR) + "/" + name + ".json"));
}

const ModelInstance& coupled() {
  static const ModelInstance inst = instance("coupled3d");
  return inst;
}

const TruncatedChain& chain() {
  static const TruncatedChain c(coupled().original, {30, 30, 30});
  return c;
}

void BM_SolveAllFlows(benchmark::State& state) {
  const Refinement z = refine(coupled().partition, 1);
  for (auto _ : state) benchmark::DoNotOptimize(solve_all_flows(z, coupled().original));
}

void BM_SolveAllFlowsSerial(benchmark::State& state) {
  const Refinement z = refine(coupled().partition, 1);
  for (auto _ : state) benchmark::DoNotOptimize(solve_all_flows_serial(z, coupled().original));
}

void BM_ChainApply(benchmark::State& state) {
  std::vector<double> x(chain().size()), y(chain().size());
  std::iota(x.begin(), x.end(), 0.0);
  for (auto _ : state) {
    chain().apply(x, y);
    benchmark::DoNotOptimize(y.data());
  }
}

void BM_ChainApplySerial(benchmark::State& state) {
  std::vector<double> x(chain().size()), y(chain().size());
  std::iota(x.begin(), x.end(), 0.0);
  for (auto _ : state) {
    chain().apply_serial(x, y);
    benchmark::DoNotOptimize(y.data());
  }
}

void BM_IterateRewards(benchmark::State& state) {
  const auto reward = reward_vector(chain(), coupled().performances.at("n1"));
  for (auto _ : state) benchmark::DoNotOptimize(iterate_rewards(chain(), reward, 50));
}

void BM_IterateRewardsSerial(benchmark::State& state) {
  const auto reward = reward_vector(chain(), coupled().performances.at("n1"));
  for (auto _ : state) benchmark::DoNotOptimize(iterate_rewards_serial(chain(), reward, 50));
}

}  // namespace

BENCHMARK(BM_SolveAllFlows)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SolveAllFlowsSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ChainApply)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ChainApplySerial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_IterateRewards)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_IterateRewardsSerial)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
