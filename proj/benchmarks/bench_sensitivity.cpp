#include "autopipe/rng.hpp"
#include "autopipe/sensitivity.hpp"

#include <benchmark/benchmark.h>

using namespace autopipe;

namespace {

struct PrccInstance {
    Matrix X;
    std::vector<double> y;
};

PrccInstance make_instance(std::size_t n, std::size_t k) {
    Rng rng(1234);
    PrccInstance inst;
    inst.X = Matrix(n, k);
    for (auto& v : inst.X.data) v = rng.next_gauss();
    inst.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        inst.y[i] = inst.X.at(i, 0) - 0.4 * inst.X.at(i, k - 1) + rng.next_gauss();
    }
    return inst;
}

} // namespace

static void BM_RankTransform(benchmark::State& state) {
    const auto inst = make_instance(static_cast<std::size_t>(state.range(0)), 5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(rank_transform(inst.X));
    }
}
BENCHMARK(BM_RankTransform)->Arg(64)->Arg(512)->Arg(4096);

static void BM_Prcc(benchmark::State& state) {
    const auto inst = make_instance(static_cast<std::size_t>(state.range(0)), 5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(prcc(inst.X, inst.y));
    }
}
BENCHMARK(BM_Prcc)->Arg(64)->Arg(512)->Arg(4096);
