// Acceptance suite: every criterion runs at its stated tolerance and prints
// one PASS/FAIL line. Exit code 0 only when everything passes.

#include "autopipe/cli.hpp"
#include "autopipe/common.hpp"
#include "autopipe/config.hpp"
#include "autopipe/metrics.hpp"
#include "autopipe/models.hpp"
#include "autopipe/preprocess.hpp"
#include "autopipe/report.hpp"
#include "autopipe/rng.hpp"
#include "autopipe/sampling.hpp"
#include "autopipe/search.hpp"
#include "autopipe/sensitivity.hpp"

#include "support/synth.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <vector>

using namespace autopipe;
namespace fs = std::filesystem;

namespace {

struct CheckFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool condition, const std::string& message) {
    if (!condition) throw CheckFailure(message);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// --- 1. metric golden checks --------------------------------------------

void criterion_metric_goldens() {
    const struct {
        double sens, spec, printed;
    } cases[] = {
        {0.8539, 0.9253, 0.8896},
        {0.7968, 0.6904, 0.7436},
        {0.3781, 0.9016, 0.6398}, // printed value rounds 0.63985
    };
    for (const auto& c : cases) {
        const double computed = 0.5 * (c.sens + c.spec);
        require(std::abs(computed - c.printed) <= 5e-5 + 1e-12,
                "balanced accuracy (" + fmt(c.sens) + ", " + fmt(c.spec) + ") -> " +
                    fmt(computed) + " differs from printed " + fmt(c.printed));
    }

    // The same identity must hold through the metric implementation.
    std::vector<std::uint8_t> y, p;
    // sens 0.8 (4/5 positives), spec 0.9 (9/10 negatives)
    for (int i = 0; i < 5; ++i) {
        y.push_back(1);
        p.push_back(i < 4 ? 1 : 0);
    }
    for (int i = 0; i < 10; ++i) {
        y.push_back(0);
        p.push_back(i < 1 ? 1 : 0);
    }
    const double ba = evaluate(MetricKind::balanced_accuracy, y, p);
    require(std::abs(ba - 0.85) < 1e-12, "BA identity through evaluate() broke");
}

// --- 2. LHS stratification ----------------------------------------------

void criterion_lhs_stratification() {
    const std::vector<int> sizes{4, 4, 3, 4, 4};
    for (std::size_t n : {12u, 16u, 48u}) {
        for (std::uint64_t seed = 0; seed < 1000; ++seed) {
            const auto specs = lhs_pipelines(sizes, n, seed);
            for (int s = 0; s < kNumStages; ++s) {
                std::vector<int> counts(sizes[s], 0);
                for (const auto& spec : specs) ++counts[spec.indices[s]];
                const int lo = static_cast<int>(n) / sizes[s];
                const int hi = lo + (static_cast<int>(n) % sizes[s] == 0 ? 0 : 1);
                for (int c : counts) {
                    require(c >= lo && c <= hi,
                            "n=" + std::to_string(n) + " seed=" + std::to_string(seed) +
                                " stage=" + std::to_string(s) + " count=" +
                                std::to_string(c) + " outside {" + std::to_string(lo) +
                                "," + std::to_string(hi) + "}");
                }
            }
        }
    }
}

// --- 3. PRCC oracle equivalence -----------------------------------------

double spearman_of(std::span<const double> a, std::span<const double> b) {
    const auto ra = rank_column(a);
    const auto rb = rank_column(b);
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= ra.size();
    mb /= rb.size();
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

std::vector<double> prcc_inversion_oracle(const Matrix& X, std::span<const double> y) {
    const std::size_t k = X.cols, dim = k + 1;
    std::vector<std::vector<double>> cols;
    for (std::size_t c = 0; c < k; ++c) cols.push_back(X.column(c));
    cols.emplace_back(y.begin(), y.end());

    std::vector<std::vector<double>> C(dim, std::vector<double>(dim, 1.0));
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = i + 1; j < dim; ++j) {
            C[i][j] = C[j][i] = spearman_of(cols[i], cols[j]);
        }
    }
    std::vector<std::vector<double>> inv(dim, std::vector<double>(dim, 0.0));
    for (std::size_t i = 0; i < dim; ++i) inv[i][i] = 1.0;
    for (std::size_t col = 0; col < dim; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < dim; ++r) {
            if (std::abs(C[r][col]) > std::abs(C[pivot][col])) pivot = r;
        }
        std::swap(C[col], C[pivot]);
        std::swap(inv[col], inv[pivot]);
        const double d = C[col][col];
        for (std::size_t j = 0; j < dim; ++j) {
            C[col][j] /= d;
            inv[col][j] /= d;
        }
        for (std::size_t r = 0; r < dim; ++r) {
            if (r == col) continue;
            const double f = C[r][col];
            for (std::size_t j = 0; j < dim; ++j) {
                C[r][j] -= f * C[col][j];
                inv[r][j] -= f * inv[col][j];
            }
        }
    }
    std::vector<double> out(k);
    for (std::size_t i = 0; i < k; ++i) {
        out[i] = -inv[i][dim - 1] / std::sqrt(inv[i][i] * inv[dim - 1][dim - 1]);
    }
    return out;
}

void criterion_prcc_oracle() {
    Rng rng(20240601);
    for (int instance = 0; instance < 100; ++instance) {
        const std::size_t n = 50, k = 4;
        Matrix X(n, k);
        for (auto& v : X.data) v = rng.next_gauss();
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = 0.8 * X.at(i, 1) - 0.5 * X.at(i, 3) + rng.next_gauss();
        }
        const auto report = prcc(X, y);
        const auto oracle = prcc_inversion_oracle(X, y);
        for (std::size_t i = 0; i < k; ++i) {
            const double diff = std::abs(report.stages[i].coefficient - oracle[i]);
            require(diff < 1e-9, "instance " + std::to_string(instance) + " stage " +
                                     std::to_string(i) + " |diff|=" + fmt(diff));
        }
    }
}

// --- 4. PRCC signal recovery --------------------------------------------

void criterion_prcc_signal_recovery() {
    const std::vector<int> sizes{4, 4, 3, 4, 4};
    int hits = 0;
    for (std::uint64_t trial = 0; trial < 50; ++trial) {
        Rng rng(mix64(7000, trial));
        const std::size_t n = 400;
        Matrix X(n, kNumStages);
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (int s = 0; s < kNumStages; ++s) {
                X.at(i, s) = static_cast<double>(rng.next_below(sizes[s]));
            }
            // Monotone in stage 1's index, small noise.
            y[i] = 0.1 * X.at(i, 0) + 0.01 * rng.next_gauss();
        }
        const auto report = prcc(X, y);
        bool ok = std::abs(report.stages[0].coefficient) > 0.9;
        for (int s = 1; s < kNumStages; ++s) {
            ok = ok && std::abs(report.stages[s].coefficient) < 0.2;
        }
        hits += ok;
    }
    require(hits >= 48, "signal recovered in only " + std::to_string(hits) + "/50 trials");
}

// --- 5. determinism across runs and worker counts ------------------------

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), "cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void criterion_determinism() {
    const fs::path dir = fs::temp_directory_path() / "autopipe_acceptance_det";
    fs::remove_all(dir);
    fs::create_directories(dir);

    test::SynthSpec synth;
    synth.rows = 300;
    synth.features = 6;
    synth.informative = 3;
    synth.positive_fraction = 0.25;
    synth.missing_fraction = 0.1;
    synth.seed = 77;
    write_csv(test::make_synthetic(synth), (dir / "data.csv").string(), "label");

    auto run_with = [&](const std::string& out, int workers) {
        const int code = cli_main(
            {"run", "--dataset", (dir / "data.csv").string(), "--label", "label",
             "--out", (dir / out).string(), "--seed", "31", "--workers",
             std::to_string(workers), "--set",
             R"(search={"n_samples": 8, "cv": {"folds": 3, "budget": 3},)"
             R"( "models": ["gaussian_naive_bayes", "logistic_regression"],)"
             R"( "refinement_budget": 8})",
             "--set", "output.verbosity=0"});
        require(code == 0, "cli run failed for " + out);
        return slurp(dir / out / "report.json");
    };

    const auto repeat_a = run_with("rep_a", 1);
    const auto repeat_b = run_with("rep_b", 1);
    require(repeat_a == repeat_b, "repeated identical runs differ");

    const auto w2 = run_with("w2", 2);
    const auto w8 = run_with("w8", 8);
    require(repeat_a == w2, "worker count 2 changed the report");
    require(repeat_a == w8, "worker count 8 changed the report");
    fs::remove_all(dir);
}

// --- 6. refinement monotonicity ------------------------------------------

void criterion_refinement_monotonic() {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        test::SynthSpec synth;
        synth.rows = 240;
        synth.features = 6;
        synth.informative = 3;
        synth.positive_fraction = 0.25;
        synth.missing_fraction = 0.1;
        synth.noise = 0.5;
        synth.seed = 100 + seed;
        const auto ds = test::make_synthetic(synth);

        SearchConfig config;
        config.models = {ModelKind::gaussian_naive_bayes, ModelKind::logistic_regression};
        config.metrics = {MetricKind::balanced_accuracy, MetricKind::sensitivity};
        config.n_samples = 8;
        config.cv_folds = 2;
        config.cv_budget = 2;
        config.refinement_budget = 8;
        config.seed = 9000 + seed;
        config.workers = 0;

        const auto report = run_search(config, ds);
        require(report.winner_validation_target >= report.incumbent_target,
                "seed " + std::to_string(seed) + ": winner " +
                    fmt(report.winner_validation_target) + " < incumbent " +
                    fmt(report.incumbent_target));
    }
}

// --- 7. end-to-end efficacy ----------------------------------------------

void criterion_end_to_end() {
    test::SynthSpec synth;
    synth.rows = 2000;
    synth.features = 25;
    synth.informative = 5;
    synth.positive_fraction = 0.2;
    synth.missing_fraction = 0.2;
    synth.noise = 0.3;
    synth.seed = 424242;
    const auto ds = test::make_synthetic(synth);

    // The all-majority baseline must sit at exactly 0.50.
    {
        const std::vector<std::uint8_t> majority(ds.n_rows(), 0);
        const double baseline =
            evaluate(MetricKind::balanced_accuracy, ds.labels(), majority);
        require(baseline == 0.5, "all-majority baseline is " + fmt(baseline));
    }

    SearchConfig config;
    config.models = {ModelKind::logistic_regression, ModelKind::gaussian_naive_bayes};
    config.metrics = {MetricKind::balanced_accuracy, MetricKind::sensitivity,
                      MetricKind::specificity, MetricKind::f1_macro, MetricKind::mcc,
                      MetricKind::auc};
    config.target_metrics = {MetricKind::balanced_accuracy};
    config.cv_folds = 3;
    config.cv_budget = 4;
    config.refinement_budget = 16;
    config.seed = 20240807;
    config.workers = 0;

    const auto experiment = run_experiment(config, ds, 10);
    for (const auto& run : experiment.per_run) {
        require(run.ok, "run with seed " + std::to_string(run.seed) + " failed: " + run.error);
    }
    const double mean_ba = experiment.aggregate.at("balanced_accuracy").mean;
    const double mean_sens = experiment.aggregate.at("sensitivity").mean;
    require(mean_ba >= 0.80, "mean test balanced accuracy " + fmt(mean_ba) + " < 0.80");
    require(mean_sens >= 0.70, "mean test sensitivity " + fmt(mean_sens) + " < 0.70");
    std::cout << "       mean balanced accuracy " << fmt(mean_ba) << " (+/-"
              << fmt(experiment.aggregate.at("balanced_accuracy").stddev)
              << "), mean sensitivity " << fmt(mean_sens) << ", baseline 0.5\n";
}

// --- 8. leakage guards ----------------------------------------------------

void criterion_leakage_guards() {
    test::SynthSpec synth;
    synth.rows = 300;
    synth.features = 6;
    synth.positive_fraction = 0.25;
    synth.missing_fraction = 0.1;
    synth.seed = 5150;
    const auto ds = test::make_synthetic(synth);
    const auto catalog = default_catalog();

    // (i) balancing never alters evaluation-partition row counts.
    {
        const auto split = stratified_split(ds, 1.0 / 3.0, 2);
        for (int balancing = 0; balancing < 4; ++balancing) {
            const PipelineSpec spec{{0, balancing, 0, 1, 0}};
            const auto [fp, fitted] = fit_apply(spec, catalog, split.train, 3);
            const auto out = transform(fp, split.test);
            require(out.features.rows == split.test.n_rows(),
                    "balancing method " + std::to_string(balancing) +
                        " changed evaluation row count");
            require(out.labels == split.test.labels(), "evaluation labels changed");
        }
    }

    // (ii) no test-partition row is read before the final retrain.
    {
        SplitPair split = stratified_split(ds, 1.0 / 3.0, 4);
        auto probe = std::make_shared<std::atomic<std::uint64_t>>(0);
        split.test.set_access_probe(probe);

        std::uint64_t before = UINT64_MAX;
        SearchHooks hooks;
        hooks.before_final_retrain = [&] { before = probe->load(); };

        SearchConfig config;
        config.models = {ModelKind::gaussian_naive_bayes};
        config.n_samples = 8;
        config.cv_folds = 2;
        config.cv_budget = 2;
        config.refinement_budget = 8;
        config.seed = 11;
        run_search_on_split(config, split, &hooks);
        require(before == 0, std::to_string(before) +
                                 " test-partition reads before the final retrain");
        require(probe->load() > 0, "final retrain never read the test partition");
    }

    // (iii) scaler and selector statistics derive from training rows only.
    {
        const auto split = stratified_split(ds, 1.0 / 3.0, 6);
        const PipelineSpec spec{{0, 0, 0, 1, 1}}; // zscore + variance threshold
        const auto [fp, fitted] = fit_apply(spec, catalog, split.train, 9);

        // Recompute the column means of the imputed training view; the
        // fitted offsets must match them, not the pooled train+test means.
        Matrix cells(split.train.n_rows(), split.train.n_cols());
        for (std::size_t r = 0; r < split.train.n_rows(); ++r) {
            for (std::size_t c = 0; c < split.train.n_cols(); ++c) {
                cells.at(r, c) = split.train.cell(r, c);
            }
        }
        for (std::size_t c = 0; c < cells.cols; ++c) {
            double sum = 0.0;
            std::size_t count = 0;
            for (std::size_t r = 0; r < cells.rows; ++r) {
                if (!cell_missing(cells.at(r, c))) {
                    sum += cells.at(r, c);
                    ++count;
                }
            }
            const double mean = sum / static_cast<double>(count);
            for (std::size_t r = 0; r < cells.rows; ++r) {
                if (cell_missing(cells.at(r, c))) cells.at(r, c) = mean;
            }
            double full = 0.0;
            for (std::size_t r = 0; r < cells.rows; ++r) full += cells.at(r, c);
            full /= static_cast<double>(cells.rows);
            require(std::abs(fp.scaler.offset[c] - full) < 1e-12,
                    "scaler mean is not the training mean for column " + std::to_string(c));
        }

        // A shifted evaluation set must come out shifted, proving the
        // transform reuses training statistics.
        std::vector<double> shifted_cells;
        for (std::size_t r = 0; r < split.test.n_rows(); ++r) {
            for (std::size_t c = 0; c < split.test.n_cols(); ++c) {
                const double v = split.test.cell(r, c);
                shifted_cells.push_back(cell_missing(v) ? v : v + 100.0);
            }
        }
        TabularDataset shifted(split.test.schema(), shifted_cells, split.test.labels(),
                               split.test.row_ids(), "neg", "pos");
        const auto out = transform(fp, shifted);
        double mean_out = 0.0;
        for (std::size_t r = 0; r < out.features.rows; ++r) mean_out += out.features.at(r, 0);
        mean_out /= static_cast<double>(out.features.rows);
        require(mean_out > 10.0, "shifted evaluation data did not stay shifted (mean " +
                                     fmt(mean_out) + "); scaler must be train-fitted");
    }
}

// --- 9. numerical checks ---------------------------------------------------

void criterion_numerical() {
    // Logistic gradient vs central finite differences, norm-wise relative.
    Rng rng(90210);
    for (int instance = 0; instance < 50; ++instance) {
        const std::size_t n = 10 + rng.next_below(15);
        const std::size_t d = 2 + rng.next_below(5);
        Matrix X(n, d);
        for (auto& v : X.data) v = rng.next_gauss();
        std::vector<std::uint8_t> y(n);
        for (auto& v : y) v = rng.next_double() < 0.5 ? 1 : 0;
        std::vector<double> w(d);
        for (auto& v : w) v = 0.7 * rng.next_gauss();
        const double bias = 0.7 * rng.next_gauss();
        const double l2 = rng.next_log_uniform(1e-4, 1e1);

        std::vector<double> analytic(d);
        double analytic_bias = 0.0;
        logistic_gradient(X, y, w, bias, l2, analytic, analytic_bias);

        const double h = 1e-6;
        std::vector<double> fd(d + 1);
        for (std::size_t j = 0; j < d; ++j) {
            auto wp = w, wm = w;
            wp[j] += h;
            wm[j] -= h;
            fd[j] = (logistic_loss(X, y, wp, bias, l2) - logistic_loss(X, y, wm, bias, l2)) /
                    (2 * h);
        }
        fd[d] = (logistic_loss(X, y, w, bias + h, l2) -
                 logistic_loss(X, y, w, bias - h, l2)) /
                (2 * h);

        double diff2 = 0.0, norm2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            diff2 += (analytic[j] - fd[j]) * (analytic[j] - fd[j]);
            norm2 += fd[j] * fd[j];
        }
        diff2 += (analytic_bias - fd[d]) * (analytic_bias - fd[d]);
        norm2 += fd[d] * fd[d];
        const double rel = std::sqrt(diff2) / std::max(std::sqrt(norm2), 1e-12);
        require(rel < 1e-6, "instance " + std::to_string(instance) +
                                ": gradient relative error " + fmt(rel));
    }

    // z-score invariant through the pipeline.
    test::SynthSpec synth;
    synth.rows = 400;
    synth.features = 10;
    synth.missing_fraction = 0.15;
    synth.seed = 8888;
    const auto ds = test::make_synthetic(synth);
    const PipelineSpec spec{{0, 0, 0, 1, 0}};
    const auto [fp, out] = fit_apply(spec, default_catalog(), ds, 4);
    for (std::size_t c = 0; c < out.features.cols; ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < out.features.rows; ++r) mean += out.features.at(r, c);
        mean /= static_cast<double>(out.features.rows);
        double var = 0.0;
        for (std::size_t r = 0; r < out.features.rows; ++r) {
            const double d = out.features.at(r, c) - mean;
            var += d * d;
        }
        var /= static_cast<double>(out.features.rows);
        require(std::abs(mean) < 1e-9, "column " + std::to_string(c) + " mean " + fmt(mean));
        require(std::abs(std::sqrt(var) - 1.0) < 1e-9,
                "column " + std::to_string(c) + " sd " + fmt(std::sqrt(var)));
    }
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void()>>> criteria = {
        {"1. metric golden checks (Tables I-II arithmetic)", criterion_metric_goldens},
        {"2. LHS stratification counts over 1000 seeds", criterion_lhs_stratification},
        {"3. PRCC residual-regression vs inversion oracle (1e-9)", criterion_prcc_oracle},
        {"4. PRCC signal recovery (>=48/50 trials)", criterion_prcc_signal_recovery},
        {"5. byte-identical reports across runs and workers {1,2,8}", criterion_determinism},
        {"6. refinement monotonicity over 20 seeded runs", criterion_refinement_monotonic},
        {"7. end-to-end efficacy (BA>=0.80, sensitivity>=0.70)", criterion_end_to_end},
        {"8. leakage guards (balancing, test reads, fit statistics)", criterion_leakage_guards},
        {"9. numerical checks (gradient FD, z-score)", criterion_numerical},
    };

    int failures = 0;
    for (const auto& [name, run] : criteria) {
        const auto start = std::chrono::steady_clock::now();
        std::string error;
        try {
            run();
        } catch (const std::exception& e) {
            error = e.what();
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        char timing[32];
        std::snprintf(timing, sizeof(timing), "%.1fs", seconds);
        if (error.empty()) {
            std::cout << "[PASS] " << name << " (" << timing << ")\n";
        } else {
            ++failures;
            std::cout << "[FAIL] " << name << " (" << timing << "): " << error << "\n";
        }
    }
    if (failures) {
        std::cout << failures << " criterion(s) failed\n";
        return 1;
    }
    std::cout << "all acceptance criteria passed\n";
    return 0;
}
