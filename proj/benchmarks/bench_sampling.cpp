#include "autopipe/sampling.hpp"

#include <benchmark/benchmark.h>

using namespace autopipe;

static void BM_LhsDesign(benchmark::State& state) {
    const std::vector<int> sizes{4, 4, 3, 4, 4};
    const auto n = static_cast<std::size_t>(state.range(0));
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(lhs_design(sizes, n, seed++));
    }
}
BENCHMARK(BM_LhsDesign)->Arg(16)->Arg(48)->Arg(256);

static void BM_LhsLargeCatalog(benchmark::State& state) {
    const std::vector<int> sizes{12, 9, 8, 10, 11};
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(lhs_design(sizes, 128, seed++));
    }
}
BENCHMARK(BM_LhsLargeCatalog);
