// Serial reference vs OpenMP batch kernels on trainer-sized batches.

#include "buckrl/kernels.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace buckrl;

std::vector<Sample> make_batch(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<Sample> out(n);
    for (Sample& s : out) {
        for (double& x : s.s) x = g(rng);
        for (double& x : s.a) x = g(rng);
        s.target = g(rng);
    }
    return out;
}

Topology topo_for(std::int64_t scale) { return {4 * std::size_t(scale), 8 * std::size_t(scale), 8 * std::size_t(scale), 8}; }

void BM_GradientSerial(benchmark::State& state) {
    const QNetwork net = init_network(1, topo_for(state.range(1)));
    const auto batch = make_batch(static_cast<std::size_t>(state.range(0)), 2);
    for (auto _ : state) benchmark::DoNotOptimize(batch_gradient_serial(net, batch));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_GradientParallel(benchmark::State& state) {
    const QNetwork net = init_network(1, topo_for(state.range(1)));
    const auto batch = make_batch(static_cast<std::size_t>(state.range(0)), 2);
    for (auto _ : state) benchmark::DoNotOptimize(batch_gradient_parallel(net, batch));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_MaxQSerial(benchmark::State& state) {
    const QNetwork net = init_network(1, topo_for(state.range(1)));
    const auto batch = make_batch(static_cast<std::size_t>(state.range(0)), 3);
    std::vector<StateInput> states;
    for (const Sample& s : batch) states.push_back(s.s);
    std::vector<ActionInput> actions{{-1, 0}, {-0.2, 0}, {0, 0}, {0.2, 0}, {1, 0}, {0, -0.2}, {0, 0.2}};
    std::vector<double> out(states.size());
    for (auto _ : state) {
        batch_max_q_serial(net, states, actions, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_MaxQParallel(benchmark::State& state) {
    const QNetwork net = init_network(1, topo_for(state.range(1)));
    const auto batch = make_batch(static_cast<std::size_t>(state.range(0)), 3);
    std::vector<StateInput> states;
    for (const Sample& s : batch) states.push_back(s.s);
    std::vector<ActionInput> actions{{-1, 0}, {-0.2, 0}, {0, 0}, {0.2, 0}, {1, 0}, {0, -0.2}, {0, 0.2}};
    std::vector<double> out(states.size());
    for (auto _ : state) {
        batch_max_q_parallel(net, states, actions, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_GradientSerial)->Args({256, 1})->Args({4096, 1})->Args({4096, 4});
BENCHMARK(BM_GradientParallel)->Args({256, 1})->Args({4096, 1})->Args({4096, 4});
BENCHMARK(BM_MaxQSerial)->Args({256, 1})->Args({4096, 1});
BENCHMARK(BM_MaxQParallel)->Args({256, 1})->Args({4096, 1});

BENCHMARK_MAIN();
