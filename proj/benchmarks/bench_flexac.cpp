#include <random>

#include <benchmark/benchmark.h>

#include "flexac/control.hpp"
#include "flexac/numlib.hpp"
#include "flexac/steering.hpp"
#include "flexac/toymodel.hpp"

namespace {

std::vector<float> random_vec(std::mt19937_64& rng, std::size_t d) {
    std::normal_distribution<float> normal;
    std::vector<float> v(d);
    for (float& x : v) x = normal(rng);
    return v;
}

flexac::ActivationSet paired_set(std::size_t pairs, std::size_t layers, std::size_t dim) {
    std::mt19937_64 rng(1);
    flexac::ActivationSet s;
    s.num_samples = 2 * pairs;
    s.num_layers = layers;
    s.hidden_dim = dim;
    for (std::size_t p = 0; p < pairs; ++p) {
        s.labels.insert(s.labels.end(), {0, 1});
        s.pair_ids.insert(s.pair_ids.end(), {static_cast<std::int64_t>(p), static_cast<std::int64_t>(p)});
    }
    s.data = random_vec(rng, s.num_samples * layers * dim);
    return s;
}

void BM_CosineDistance(benchmark::State& state) {
    std::mt19937_64 rng(1);
    const auto a = random_vec(rng, static_cast<std::size_t>(state.range(0)));
    const auto b = random_vec(rng, a.size());
    for (auto _ : state) benchmark::DoNotOptimize(flexac::cosine_distance(a, b));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CosineDistance)->Arg(64)->Arg(4096);

void BM_ApplyControl(benchmark::State& state) {
    std::mt19937_64 rng(2);
    const std::size_t d = static_cast<std::size_t>(state.range(0));
    const auto f = random_vec(rng, d);
    const auto g = random_vec(rng, d);
    const auto t = random_vec(rng, d);
    for (auto _ : state) {
        benchmark::DoNotOptimize(flexac::apply_control(f, flexac::Steer{g, 1.0}, flexac::Steer{t, 0.5}, true, true));
    }
}
BENCHMARK(BM_ApplyControl)->Arg(64)->Arg(4096);

void BM_ToyForward(benchmark::State& state) {
    const auto model = flexac::ToyModel::init_seeded(1, 64, 32, 8, 64);
    std::vector<std::uint32_t> tokens(static_cast<std::size_t>(state.range(0)));
    for (std::size_t i = 0; i < tokens.size(); ++i) tokens[i] = static_cast<std::uint32_t>(i % 64);
    for (auto _ : state) benchmark::DoNotOptimize(flexac::forward_capture(model, tokens));
}
BENCHMARK(BM_ToyForward)->Arg(1)->Arg(16);

void BM_BuildGeneralVector(benchmark::State& state) {
    const auto set = paired_set(static_cast<std::size_t>(state.range(0)), 4, 256);
    const std::vector<std::uint32_t> layers{1, 2};
    for (auto _ : state) benchmark::DoNotOptimize(flexac::build_general_vector(set, layers, 50));
}
BENCHMARK(BM_BuildGeneralVector)->Arg(200)->Arg(2000);

void BM_Pca(benchmark::State& state) {
    std::mt19937_64 rng(3);
    const std::size_t n = 400, d = static_cast<std::size_t>(state.range(0));
    const flexac::Matrix data(n, d, random_vec(rng, n * d));
    for (auto _ : state) benchmark::DoNotOptimize(flexac::pca_project(data, 3));
}
BENCHMARK(BM_Pca)->Arg(16)->Arg(128);

}  // namespace

BENCHMARK_MAIN();
