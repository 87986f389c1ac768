#include <benchmark/benchmark.h>

#include "tbm/estimation.hpp"
#include "tbm/simulate.hpp"
#include "tbm/tensor.hpp"

namespace {

tbm::SimOutput make_data(std::vector<std::size_t> dims,
                         std::vector<std::size_t> ranks, double sigma) {
    tbm::SimConfig cfg;
    cfg.dims = std::move(dims);
    cfg.ranks = std::move(ranks);
    cfg.sigma = sigma;
    cfg.seed = 42;
    return tbm::gen_data(cfg);
}

void BM_ModeMultiply(benchmark::State& state) {
    const std::size_t d = static_cast<std::size_t>(state.range(0));
    const tbm::SimOutput data = make_data({d, d, d}, {2, 2, 2}, 1.0);
    const tbm::Matrix m = tbm::Matrix::identity(d);
    for (auto _ : state) {
        benchmark::DoNotOptimize(tbm::mode_multiply(data.y, m, 1));
    }
    state.SetItemsProcessed(state.iterations() *
                            static_cast<std::int64_t>(data.y.size()));
}
BENCHMARK(BM_ModeMultiply)->Arg(20)->Arg(40);

void BM_Unfold(benchmark::State& state) {
    const std::size_t d = static_cast<std::size_t>(state.range(0));
    const tbm::SimOutput data = make_data({d, d, d}, {2, 2, 2}, 1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(tbm::unfold(data.y, 1));
    }
}
BENCHMARK(BM_Unfold)->Arg(20)->Arg(40)->Arg(60);

void BM_KMeansInit(benchmark::State& state) {
    const std::size_t d = static_cast<std::size_t>(state.range(0));
    const tbm::SimOutput data = make_data({d, d, d}, {4, 4, 4}, 3.0);
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(tbm::kmeans_init(data.y, {4, 4, 4}, seed++));
    }
}
BENCHMARK(BM_KMeansInit)->Arg(20)->Arg(40);

void BM_UpdateCore(benchmark::State& state) {
    const std::size_t d = static_cast<std::size_t>(state.range(0));
    const tbm::SimOutput data = make_data({d, d, d}, {4, 4, 4}, 3.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            tbm::update_core(data.y, data.truth.memberships));
    }
    state.SetItemsProcessed(state.iterations() *
                            static_cast<std::int64_t>(data.y.size()));
}
BENCHMARK(BM_UpdateCore)->Arg(20)->Arg(40)->Arg(60);

// One full alternating sweep (core update plus K membership updates); the
// per-sweep cost contract is linear in the number of entries.
void BM_Sweep(benchmark::State& state) {
    const std::size_t d3 = static_cast<std::size_t>(state.range(0));
    const tbm::SimOutput data = make_data({40, 40, d3}, {4, 4, 4}, 3.0);
    tbm::BlockModel model = data.truth;
    for (auto _ : state) {
        model.core = tbm::update_core(data.y, model.memberships);
        for (std::size_t k = 0; k < 3; ++k) {
            model.memberships[k] = tbm::update_membership(data.y, model, k);
        }
        benchmark::DoNotOptimize(model);
    }
    state.SetItemsProcessed(state.iterations() *
                            static_cast<std::int64_t>(data.y.size()));
}
BENCHMARK(BM_Sweep)->Arg(40)->Arg(80)->Arg(160);

void BM_Fit(benchmark::State& state) {
    const std::size_t d = static_cast<std::size_t>(state.range(0));
    const tbm::SimOutput data = make_data({d, d, d}, {4, 4, 4}, 3.0);
    tbm::FitConfig cfg;
    cfg.ranks = {4, 4, 4};
    cfg.restarts = 5;
    for (auto _ : state) {
        cfg.seed++;
        benchmark::DoNotOptimize(tbm::fit(data.y, cfg));
    }
}
BENCHMARK(BM_Fit)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
