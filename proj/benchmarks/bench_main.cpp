// Microbenchmarks for the fitting, search and simulation hot paths, plus the
// one wall-clock budget case (p=100 with preselection) that is too slow for
// the unit suite. Run: cam_benchmarks [--benchmark_filter=...]
#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <thread>

#include "cam/additive.hpp"
#include "cam/boosting.hpp"
#include "cam/dataset.hpp"
#include "cam/experiment.hpp"
#include "cam/graph.hpp"
#include "cam/pipeline.hpp"
#include "cam/rng.hpp"
#include "cam/simulate.hpp"

using cam::Dataset;
using cam::Rng;

namespace {

int worker_threads() {
    const unsigned hw = std::thread::hardware_concurrency();
    return static_cast<int>(std::max(1u, std::min(8u, hw == 0 ? 1u : hw)));
}

Dataset gp_dataset(int p, int n, std::uint64_t seed) {
    Rng rng(seed);
    const cam::SemSpec spec = cam::random_sem_spec(
        p, std::min(1.0, 2.0 / (p - 1)), cam::FunctionSpec::Kind::gaussian_process, 1.0, 1.0,
        rng);
    return cam::simulate_data(spec, n, rng);
}

void BM_fit_additive(benchmark::State& state) {
    const Dataset data = gp_dataset(5, 200, 1);
    const cam::DesignCache cache(data, 10);
    const Eigen::VectorXd y = data.column(4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(cam::fit_additive(y, cache, {0, 1, 2}));
    }
}
BENCHMARK(BM_fit_additive);

void BM_marginal_gcv(benchmark::State& state) {
    const Dataset data = gp_dataset(2, 500, 2);
    const cam::DesignCache cache(data, 10);
    const Eigen::VectorXd y = data.column(1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(cam::marginal_gcv_lambda(y, cache.column(0)));
    }
}
BENCHMARK(BM_marginal_gcv);

void BM_boost_select(benchmark::State& state) {
    const Dataset data = gp_dataset(10, 200, 3);
    const cam::DesignCache cache(data, 10);
    const Eigen::VectorXd y = data.column(9);
    std::vector<int> cand;
    for (int k = 0; k < 9; ++k) cand.push_back(k);
    for (auto _ : state) {
        benchmark::DoNotOptimize(cam::boost_select(y, cache, cand, 100, 0.1, 1));
    }
}
BENCHMARK(BM_boost_select);

void BM_inc_edge_unrestricted(benchmark::State& state) {
    const Dataset data = gp_dataset(static_cast<int>(state.range(0)), 200, 4);
    cam::CamConfig cfg;
    cfg.use_pns = false;
    for (auto _ : state) {
        benchmark::DoNotOptimize(cam::inc_edge(data, cfg, worker_threads()));
    }
}
BENCHMARK(BM_inc_edge_unrestricted)->Arg(6)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_pipeline_with_pns(benchmark::State& state) {
    const Dataset data = gp_dataset(static_cast<int>(state.range(0)), 200, 5);
    cam::CamConfig cfg;
    for (auto _ : state) {
        benchmark::DoNotOptimize(cam::cam_pipeline(data, cfg, worker_threads()));
    }
}
BENCHMARK(BM_pipeline_with_pns)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

// Budget case: the full pipeline at p=100, n=200 must finish in under ten
// minutes on eight cores. The reported wall time is the check.
void BM_pipeline_p100_budget(benchmark::State& state) {
    const Dataset data = gp_dataset(100, 200, 6);
    cam::CamConfig cfg;
    for (auto _ : state) {
        benchmark::DoNotOptimize(cam::cam_pipeline(data, cfg, worker_threads()));
    }
}
BENCHMARK(BM_pipeline_p100_budget)->Iterations(1)->Unit(benchmark::kSecond);

void BM_sid(benchmark::State& state) {
    Rng rng(7);
    const int p = static_cast<int>(state.range(0));
    const cam::Dag truth = cam::random_dag(p, 0.3, rng);
    const cam::Dag est = cam::random_dag(p, 0.3, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(cam::sid(truth, est));
    }
}
BENCHMARK(BM_sid)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_shd(benchmark::State& state) {
    Rng rng(8);
    const cam::Dag truth = cam::random_dag(50, 0.2, rng);
    const cam::Dag est = cam::random_dag(50, 0.2, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(cam::shd(truth, est));
    }
}
BENCHMARK(BM_shd);

void BM_simulate(benchmark::State& state) {
    Rng spec_rng(9);
    const cam::SemSpec spec = cam::random_sem_spec(
        10, 2.0 / 9.0, cam::FunctionSpec::Kind::gaussian_process, 1.0, 1.0, spec_rng);
    std::uint64_t seed = 10;
    for (auto _ : state) {
        Rng rng(seed++);
        benchmark::DoNotOptimize(cam::simulate_data(spec, 200, rng));
    }
}
BENCHMARK(BM_simulate)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
