#include <benchmark/benchmark.h>

#include "casp/estimate.hpp"
#include "casp/nuisance.hpp"
#include "casp/policy_math.hpp"
#include "casp/rng.hpp"
#include "casp/select.hpp"
#include "casp/simulate.hpp"

namespace {

using namespace casp;

struct Workload {
  Environment env;
  LoggedDataset data;
  Propensities prop;
  RewardModel model;
  TwoStagePolicy pi;

  static const Workload& instance() {
    static const Workload w = [] {
      BlockConfig cfg;
      cfg.block = Block::coupling;
      cfg.seed = 11;
      Workload out;
      out.env = build_block_env(cfg);
      out.data = sample_log(out.env, 2400, 99);
      out.prop = logged_propensities(out.env);
      out.model = fit_reward_crossfit(out.data, 5, 1.0, 7);
      CounterRng rng(5);
      out.pi = random_feasible_policy(out.env, rng, "bench");
      return out;
    }();
    return w;
  }
};

void BM_DrScores(benchmark::State& state) {
  const Workload& w = Workload::instance();
  for (auto _ : state) {
    benchmark::DoNotOptimize(dr_score_records(w.data, w.pi, w.model, w.prop));
  }
  state.SetItemsProcessed(state.iterations() * w.data.size());
}
BENCHMARK(BM_DrScores);

void BM_EmpiricalBurden(benchmark::State& state) {
  const Workload& w = Workload::instance();
  for (auto _ : state) {
    benchmark::DoNotOptimize(empirical_burden(w.data, w.pi, w.prop));
  }
  state.SetItemsProcessed(state.iterations() * w.data.size());
}
BENCHMARK(BM_EmpiricalBurden);

void BM_EvaluatePolicy(benchmark::State& state) {
  const Workload& w = Workload::instance();
  const std::vector<double> grid = {0.0, 0.01, 0.02, 0.05, 0.1, 0.2};
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate_policy(w.data, w.pi, w.model, w.prop, grid));
  }
  state.SetItemsProcessed(state.iterations() * w.data.size());
}
BENCHMARK(BM_EvaluatePolicy);

void BM_LibraryEvaluate(benchmark::State& state) {
  const Workload& w = Workload::instance();
  const PolicyLibrary library =
      build_policy_library(w.env.feasible, w.env.behavior, w.model,
                           static_cast<int>(state.range(0)));
  SelectorConfig cfg;
  cfg.threads = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate_library(library, w.data, w.model, w.prop, cfg));
  }
  state.SetItemsProcessed(state.iterations() * library.size());
}
BENCHMARK(BM_LibraryEvaluate)->Arg(10)->Arg(40);

void BM_PopulationBurden(benchmark::State& state) {
  const Workload& w = Workload::instance();
  for (auto _ : state) {
    benchmark::DoNotOptimize(burden(w.env, w.pi));
  }
}
BENCHMARK(BM_PopulationBurden);

}  // namespace

BENCHMARK_MAIN();
