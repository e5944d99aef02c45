#include "autopipe/metrics.hpp"
#include "autopipe/models.hpp"
#include "autopipe/rng.hpp"

#include <benchmark/benchmark.h>

using namespace autopipe;

namespace {

struct TrainSet {
    Matrix X;
    std::vector<std::uint8_t> y;
};

TrainSet make_train(std::size_t n, std::size_t d) {
    Rng rng(99);
    TrainSet t;
    t.X = Matrix(n, d);
    for (auto& v : t.X.data) v = rng.next_gauss();
    t.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        t.y[i] = t.X.at(i, 0) + 0.5 * rng.next_gauss() > 0.6 ? 1 : 0;
    }
    return t;
}

} // namespace

static void BM_LogisticFit(benchmark::State& state) {
    const auto t = make_train(static_cast<std::size_t>(state.range(0)), 25);
    const HyperParams params{{"l2", 1.0}, {"max_iters", 500}};
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_model(ModelKind::logistic_regression, t.X, t.y, params, 1));
    }
}
BENCHMARK(BM_LogisticFit)->Arg(256)->Arg(1024);

static void BM_TreeFit(benchmark::State& state) {
    const auto t = make_train(static_cast<std::size_t>(state.range(0)), 25);
    const HyperParams params{{"max_depth", 8}, {"min_leaf", 3}};
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_model(ModelKind::decision_tree, t.X, t.y, params, 1));
    }
}
BENCHMARK(BM_TreeFit)->Arg(256)->Arg(1024);

static void BM_AucFromScores(benchmark::State& state) {
    Rng rng(7);
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    std::vector<std::uint8_t> y(n);
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = rng.next_double() < 0.3 ? 1 : 0;
        s[i] = rng.next_double();
    }
    y[0] = 1;
    y[1] = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(auc_from_scores(y, s));
    }
}
BENCHMARK(BM_AucFromScores)->Arg(1024)->Arg(16384);
