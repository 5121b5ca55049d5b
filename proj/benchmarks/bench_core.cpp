#include <benchmark/benchmark.h>

#include <vector>

#include "tplas/data/partition.hpp"
#include "tplas/data/synthetic.hpp"
#include "tplas/metrics/metrics.hpp"
#include "tplas/models/forecaster.hpp"
#include "tplas/training/optimizer.hpp"

using namespace tplas;

namespace {

ForecasterSpec spec_for(ModelKind kind, std::size_t l, std::size_t h) {
    ForecasterSpec s;
    s.kind = kind;
    s.context_length = l;
    s.horizon = h;
    s.channels = 1;
    s.kernel_size = 25;
    s.hidden = {128, 128};
    return s;
}

// Normalized stream of 4000 steps, 96 -> 96 windows from the train split of one partition.
struct Fixture {
    TimeSeries series;
    data::PartitionedSeries ps;
    data::WindowSet windows;

    Fixture()
        : series(data::gen_synthetic(data::ShiftScript{}, 4000, 1, 1, 3).series),
          ps(series, data::make_partitions(4000, 1), 96, 96),
          windows(ps.windows(0, Split::train)) {}
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

void BM_Predict(benchmark::State& state) {
    const auto kind = static_cast<ModelKind>(state.range(0));
    const auto ck = models::init_params(spec_for(kind, 96, 96), 1);
    const auto& w = fixture().windows;
    for (auto _ : state) benchmark::DoNotOptimize(models::predict(ck, w[0].context));
}
BENCHMARK(BM_Predict)
    ->Arg(static_cast<int>(ModelKind::naive_seasonal))
    ->Arg(static_cast<int>(ModelKind::linear_direct))
    ->Arg(static_cast<int>(ModelKind::mlp));

void BM_Grad(benchmark::State& state) {
    const auto kind = static_cast<ModelKind>(state.range(0));
    const auto ck = models::init_params(spec_for(kind, 96, 96), 1);
    const auto samples = fixture().windows.samples();
    const std::span<const data::Sample> batch(samples.data(), static_cast<std::size_t>(state.range(1)));
    for (auto _ : state) benchmark::DoNotOptimize(models::grad(ck, batch));
    state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_Grad)
    ->Args({static_cast<int>(ModelKind::linear_direct), 32})
    ->Args({static_cast<int>(ModelKind::mlp), 32});

void BM_AdamW(benchmark::State& state) {
    const auto ck = models::init_params(spec_for(ModelKind::mlp, 96, 96), 1);
    auto params = models::param_values(ck);
    const auto grads = params;
    auto st = training::make_state(params, training::OptimHyper{});
    for (auto _ : state) {
        auto [p, s] = training::adamw_step(std::move(params), grads, std::move(st));
        params = std::move(p);
        st = std::move(s);
    }
}
BENCHMARK(BM_AdamW);

void BM_MseEval(benchmark::State& state) {
    const auto ck = models::init_params(spec_for(ModelKind::linear_direct, 96, 96), 1);
    const auto& w = fixture().windows;
    for (auto _ : state) benchmark::DoNotOptimize(metrics::mse_eval(ck, w));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(w.size()));
}
BENCHMARK(BM_MseEval);

}  // namespace
BENCHMARK_MAIN();
