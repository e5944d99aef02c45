#include "autopipe/search.hpp"

#include "autopipe/common.hpp"
#include "autopipe/rng.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <set>
#include <thread>

namespace autopipe {

namespace {

constexpr std::uint64_t kPipelineSalt = 0x70697065u;
constexpr std::uint64_t kValSplitSalt = 0x76616cu;
constexpr std::uint64_t kFitSalt = 0x666970u;
constexpr std::uint64_t kModelSalt = 0x6d646cu;
constexpr std::uint64_t kLhsSalt = 0x6c6873u;
constexpr std::uint64_t kSplitSalt = 0x73706cu;
constexpr std::uint64_t kSubsampleSalt = 0x737562u;
constexpr std::uint64_t kFinalSalt = 0x66696e616cu;

/// Run fn(0..n-1) on a worker pool. Tasks must be independent; results must
/// be written to per-index slots so the merge order is the index order and
/// the worker count can never change the outcome.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
    if (workers <= 0) {
        workers = static_cast<int>(std::thread::hardware_concurrency());
        if (workers <= 0) workers = 1;
    }
    const std::size_t n_threads = std::min<std::size_t>(workers, n);
    if (n_threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) break;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

std::vector<std::size_t> metric_positions(const std::vector<MetricKind>& metrics,
                                          const std::vector<MetricKind>& wanted) {
    std::vector<std::size_t> out;
    for (auto target : wanted) {
        const auto it = std::find(metrics.begin(), metrics.end(), target);
        if (it == metrics.end()) {
            throw ConfigError("target metric " + to_string(target) +
                              " is not in the configured metric panel");
        }
        out.push_back(static_cast<std::size_t>(it - metrics.begin()));
    }
    return out;
}

struct PhaseTimer {
    std::vector<std::pair<std::string, double>>& sink;
    std::string name;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    ~PhaseTimer() {
        const auto elapsed = std::chrono::steady_clock::now() - start;
        sink.emplace_back(name, std::chrono::duration<double>(elapsed).count());
    }
};

} // namespace

void SearchConfig::validate() const {
    if (models.empty()) throw ConfigError("at least one model kind is required");
    if (metrics.empty()) throw ConfigError("the metric panel cannot be empty");
    if (target_metrics.empty()) throw ConfigError("target metrics cannot be empty");
    metric_positions(metrics, target_metrics);
    if (top_m < 1 || top_m > kNumStages) {
        throw ConfigError("m must be in [1," + std::to_string(kNumStages) + "]");
    }
    if (refinement_budget < 1) throw ConfigError("refinement budget must be >= 1");
    if (cv_folds < 2) throw ConfigError("cv folds must be >= 2");
    if (cv_budget < 1) throw ConfigError("cv budget must be >= 1");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ConfigError("test_fraction must be in (0,1)");
    }
    if (!(subsample_fraction > 0.0 && subsample_fraction <= 1.0)) {
        throw ConfigError("subsample_fraction must be in (0,1]");
    }
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
        throw ConfigError("validation_fraction must be in (0,1)");
    }
    for (const auto& stage : catalog.stages) {
        if (stage.empty()) throw ConfigError("a stage has zero methods");
    }
}

std::size_t SearchConfig::resolved_n_samples() const {
    if (n_samples > 0) return n_samples;
    const auto sizes = catalog.step_sizes();
    const int max_n = *std::max_element(sizes.begin(), sizes.end());
    return std::min<std::size_t>(4 * static_cast<std::size_t>(max_n), catalog.space_size());
}

double row_target_value(const ResultsRow& row, std::size_t model_index,
                        const std::vector<std::size_t>& target_positions) {
    if (row.failed) return std::numeric_limits<double>::quiet_NaN();
    double sum = 0.0;
    for (std::size_t pos : target_positions) {
        const double v = row.values[model_index][pos];
        if (std::isnan(v)) return std::numeric_limits<double>::quiet_NaN();
        sum += v;
    }
    return sum / static_cast<double>(target_positions.size());
}

ResultsRow evaluate_pipeline(const PipelineSpec& spec, const StageCatalog& catalog,
                             const SplitPair& split, const std::vector<ModelKind>& models,
                             const std::vector<MetricKind>& metrics,
                             const std::vector<MetricKind>& cv_scoring, int cv_folds,
                             int cv_budget, std::uint64_t global_seed,
                             double validation_fraction) {
    ResultsRow row;
    row.spec = spec;
    row.provenance = "lhs";
    row.pipeline_seed = spec.mix_into(mix64(global_seed, kPipelineSalt));
    row.values.assign(models.size(),
                      std::vector<double>(metrics.size(),
                                          std::numeric_limits<double>::quiet_NaN()));
    try {
        catalog.validate_spec(spec);
        // Selection happens on a validation partition carved from the
        // training data; the test partition stays untouched until the end.
        const SplitPair inner =
            stratified_split(split.train, validation_fraction, mix64(row.pipeline_seed, kValSplitSalt));

        auto [pipeline, fitted] =
            fit_apply(spec, catalog, inner.train, mix64(row.pipeline_seed, kFitSalt));
        row.audit = pipeline.audit;
        const TransformResult validation = transform(pipeline, inner.test);
        if (validation.unknown_categories > 0) {
            row.audit.push_back({"engineering",
                                 std::to_string(validation.unknown_categories) +
                                     " unseen categories mapped to the unknown code"});
        }

        for (std::size_t m = 0; m < models.size(); ++m) {
            CvConfig cv;
            cv.folds = cv_folds;
            cv.budget = cv_budget;
            cv.scoring = cv_scoring;
            // Keyed by model kind, not list position: the same spec yields
            // the same value for a model in the LHS and refinement phases.
            cv.seed = mix64(row.pipeline_seed, kModelSalt,
                            static_cast<std::uint64_t>(models[m]));
            auto [model, cv_score] =
                random_search_fit(models[m], fitted.features, fitted.labels, cv);
            const Prediction pred = predict(model, validation.features);
            for (std::size_t k = 0; k < metrics.size(); ++k) {
                row.values[m][k] =
                    evaluate(metrics[k], validation.labels, pred.labels, pred.scores);
            }
        }
    } catch (const std::exception& e) {
        row.failed = true;
        row.failure_reason = e.what();
        for (auto& per_model : row.values) {
            std::fill(per_model.begin(), per_model.end(),
                      std::numeric_limits<double>::quiet_NaN());
        }
    }
    return row;
}

SearchReport run_search_on_split(const SearchConfig& config, const SplitPair& split,
                                 const SearchHooks* hooks) {
    config.validate();

    SearchReport report;
    report.seed = config.seed;
    report.train_rows = split.train.n_rows();
    report.test_rows = split.test.n_rows();
    report.table.models = config.models;
    report.table.metrics = config.metrics;
    const auto target_positions = metric_positions(config.metrics, config.target_metrics);

    // (a) stratified LHS over the pipeline index space
    {
        PhaseTimer timer{report.timings_sec, "lhs_sampling"};
        report.design = lhs_design(config.catalog.step_sizes(), config.resolved_n_samples(),
                                   mix64(config.seed, kLhsSalt));
    }
    report.warnings.insert(report.warnings.end(), report.design.warnings.begin(),
                           report.design.warnings.end());

    // (b)+(c) evaluate every sampled pipeline; merge in spec order
    {
        PhaseTimer timer{report.timings_sec, "lhs_evaluation"};
        report.table.rows.resize(report.design.specs.size());
        parallel_for(report.design.specs.size(), config.workers, [&](std::size_t i) {
            report.table.rows[i] = evaluate_pipeline(
                report.design.specs[i], config.catalog, split, config.models, config.metrics,
                config.target_metrics, config.cv_folds, config.cv_budget, config.seed,
                config.validation_fraction);
        });
    }

    std::vector<std::size_t> ok_rows;
    for (std::size_t i = 0; i < report.table.rows.size(); ++i) {
        if (!report.table.rows[i].failed) ok_rows.push_back(i);
    }
    if (ok_rows.empty()) {
        std::string detail = report.table.rows.empty() ? "" : report.table.rows[0].failure_reason;
        throw Error("all sampled pipelines failed" + (detail.empty() ? "" : ": " + detail));
    }

    // Lock the model whose best row maximizes the aggregated target;
    // ties: higher mean target across rows, then model list order.
    std::size_t locked = 0;
    {
        double best_max = -std::numeric_limits<double>::infinity();
        double best_mean = -std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < config.models.size(); ++m) {
            double max_v = -std::numeric_limits<double>::infinity();
            double sum = 0.0;
            std::size_t count = 0;
            for (std::size_t i : ok_rows) {
                const double v = row_target_value(report.table.rows[i], m, target_positions);
                if (std::isnan(v)) continue;
                max_v = std::max(max_v, v);
                sum += v;
                ++count;
            }
            const double mean_v = count ? sum / static_cast<double>(count)
                                        : -std::numeric_limits<double>::infinity();
            if (max_v > best_max || (max_v == best_max && mean_v > best_mean)) {
                best_max = max_v;
                best_mean = mean_v;
                locked = m;
            }
        }
    }
    report.locked_model = config.models[locked];

    // Incumbent: best LHS row for the locked model, earliest on ties.
    std::size_t incumbent_row = ok_rows.front();
    double incumbent_target = -std::numeric_limits<double>::infinity();
    for (std::size_t i : ok_rows) {
        const double v = row_target_value(report.table.rows[i], locked, target_positions);
        if (!std::isnan(v) && v > incumbent_target) {
            incumbent_target = v;
            incumbent_row = i;
        }
    }
    report.incumbent_spec = report.table.rows[incumbent_row].spec;
    report.incumbent_target = incumbent_target;

    // (d) PRCC of stage indices against the locked model's target column
    {
        PhaseTimer timer{report.timings_sec, "prcc"};
        if (ok_rows.size() >= static_cast<std::size_t>(kNumStages) + 3) {
            Matrix X(ok_rows.size(), kNumStages);
            std::vector<double> y(ok_rows.size());
            for (std::size_t i = 0; i < ok_rows.size(); ++i) {
                const auto& row = report.table.rows[ok_rows[i]];
                for (int s = 0; s < kNumStages; ++s) {
                    X.at(i, s) = static_cast<double>(row.spec.indices[s]);
                }
                y[i] = row_target_value(row, locked, target_positions);
            }
            try {
                report.prcc_report = prcc(X, y);
                report.prcc_computed = true;
            } catch (const DataError& e) {
                report.warnings.push_back(std::string("PRCC skipped: ") + e.what());
            }
        } else {
            report.warnings.push_back("PRCC skipped: only " + std::to_string(ok_rows.size()) +
                                      " evaluated pipelines");
        }
    }

    if (report.prcc_computed) {
        report.refined_stages = top_m(report.prcc_report, config.top_m);
        if (report.refined_stages.size() < static_cast<std::size_t>(config.top_m)) {
            report.warnings.push_back(
                "only " + std::to_string(report.refined_stages.size()) +
                " non-degenerate stages available for refinement (m=" +
                std::to_string(config.top_m) + ")");
        }
    }
    if (report.refined_stages.empty() && report.prcc_computed) {
        report.warnings.push_back("refinement skipped: every stage is degenerate");
    } else if (!report.prcc_computed) {
        report.warnings.push_back("refinement skipped: PRCC unavailable, returning incumbent");
    }

    // (e) full Cartesian grid over the top-m stages, other stages frozen to
    // the incumbent, capped by distance-from-incumbent then index order.
    std::size_t winner_row = incumbent_row;
    double winner_target = incumbent_target;
    if (!report.refined_stages.empty()) {
        PhaseTimer timer{report.timings_sec, "refinement"};
        const auto& inc = report.incumbent_spec;
        std::vector<PipelineSpec> grid;
        grid.push_back(inc);
        std::vector<int> cursor(report.refined_stages.size(), 0);
        const auto sizes = config.catalog.step_sizes();
        while (true) {
            PipelineSpec candidate = inc;
            for (std::size_t t = 0; t < cursor.size(); ++t) {
                candidate.indices[report.refined_stages[t]] = cursor[t];
            }
            if (candidate != inc) grid.push_back(candidate);
            std::size_t t = 0;
            for (; t < cursor.size(); ++t) {
                if (++cursor[t] < sizes[report.refined_stages[t]]) break;
                cursor[t] = 0;
            }
            if (t == cursor.size()) break;
        }
        auto distance = [&](const PipelineSpec& s) {
            int d = 0;
            for (int stage : report.refined_stages) {
                d += std::abs(s.indices[stage] - inc.indices[stage]);
            }
            return d;
        };
        std::stable_sort(grid.begin(), grid.end(), [&](const auto& a, const auto& b) {
            const int da = distance(a), db = distance(b);
            if (da != db) return da < db;
            return a < b;
        });
        if (grid.size() > config.refinement_budget) grid.resize(config.refinement_budget);

        // Specs already evaluated are reused: evaluation is seed-deterministic,
        // so a re-run would reproduce the very same row.
        std::set<PipelineSpec> seen;
        for (const auto& row : report.table.rows) seen.insert(row.spec);
        std::vector<PipelineSpec> fresh;
        for (const auto& spec : grid) {
            if (!seen.count(spec)) {
                seen.insert(spec);
                fresh.push_back(spec);
            }
        }

        std::vector<ResultsRow> new_rows(fresh.size());
        const std::vector<ModelKind> locked_only = {config.models[locked]};
        parallel_for(fresh.size(), config.workers, [&](std::size_t i) {
            ResultsRow narrow = evaluate_pipeline(
                fresh[i], config.catalog, split, locked_only, config.metrics,
                config.target_metrics, config.cv_folds, config.cv_budget, config.seed,
                config.validation_fraction);
            // Expand to the full table layout; other models stay NaN.
            ResultsRow wide = narrow;
            wide.provenance = "refinement";
            wide.values.assign(config.models.size(),
                               std::vector<double>(config.metrics.size(),
                                                   std::numeric_limits<double>::quiet_NaN()));
            if (!narrow.failed) wide.values[locked] = narrow.values[0];
            new_rows[i] = std::move(wide);
        });
        for (auto& row : new_rows) {
            report.table.rows.push_back(std::move(row));
            const std::size_t idx = report.table.rows.size() - 1;
            const double v = row_target_value(report.table.rows[idx], locked, target_positions);
            if (!std::isnan(v) && v > winner_target) {
                winner_target = v;
                winner_row = idx;
            }
        }
    }

    if (hooks && hooks->before_final_retrain) hooks->before_final_retrain();

    // Final retrain of the winner on the full training partition; the test
    // partition is read here for the first and only time.
    {
        PhaseTimer timer{report.timings_sec, "final_retrain"};
        const auto& winner = report.table.rows[winner_row];
        report.winner_spec = winner.spec;
        report.winner_provenance = winner.provenance;
        report.winner_validation_target = winner_target;
        for (int s = 0; s < kNumStages; ++s) {
            report.winner_methods[s] =
                config.catalog.method(s, winner.spec.indices[s]).name;
        }

        auto [pipeline, fitted] = fit_apply(winner.spec, config.catalog, split.train,
                                            mix64(config.seed, kFinalSalt, 1));
        CvConfig cv;
        cv.folds = config.cv_folds;
        cv.budget = config.cv_budget;
        cv.scoring = config.target_metrics;
        cv.seed = mix64(config.seed, kFinalSalt, 2);
        auto [model, cv_score] =
            random_search_fit(report.locked_model, fitted.features, fitted.labels, cv);
        report.winner_model = model.kind;
        report.winner_hyperparameters = model.hyperparameters;
        report.winner_cv_score = cv_score;
        report.winner_pipeline_description = pipeline.describe();
        report.winner_feature_names = pipeline.feature_names;

        const TransformResult test_data = transform(pipeline, split.test);
        const Prediction pred = predict(model, test_data.features);
        for (auto metric : config.metrics) {
            report.test_metrics[to_string(metric)] =
                evaluate(metric, test_data.labels, pred.labels, pred.scores);
        }
    }
    return report;
}

SearchReport run_search(const SearchConfig& config, const TabularDataset& dataset) {
    config.validate();
    TabularDataset sampled;
    const TabularDataset* source = &dataset;
    if (config.subsample_fraction < 1.0) {
        sampled = subsample(dataset, config.subsample_fraction,
                            mix64(config.seed, kSubsampleSalt));
        source = &sampled;
    }
    const SplitPair split =
        stratified_split(*source, config.test_fraction, mix64(config.seed, kSplitSalt));
    return run_search_on_split(config, split, nullptr);
}

ExperimentReport run_experiment(const SearchConfig& config, const TabularDataset& dataset,
                                int runs) {
    if (runs < 1) throw DataError("runs must be >= 1");
    ExperimentReport experiment;
    experiment.runs = runs;
    experiment.base_seed = config.seed;

    for (int i = 0; i < runs; ++i) {
        ExperimentRun run;
        run.seed = config.seed + static_cast<std::uint64_t>(i);
        SearchConfig run_config = config;
        run_config.seed = run.seed;
        try {
            run.report = run_search(run_config, dataset);
            run.ok = true;
        } catch (const std::exception& e) {
            run.error = e.what();
            experiment.warnings.push_back("run " + std::to_string(i) +
                                          " failed: " + run.error);
        }
        experiment.per_run.push_back(std::move(run));
    }

    // Mean and standard deviation over the successful runs' test panels.
    std::map<std::string, std::vector<double>> samples;
    for (const auto& run : experiment.per_run) {
        if (!run.ok) continue;
        for (const auto& [name, value] : run.report.test_metrics) {
            samples[name].push_back(value);
        }
    }
    for (const auto& [name, values] : samples) {
        MetricStats stats;
        for (double v : values) stats.mean += v;
        stats.mean /= static_cast<double>(values.size());
        if (values.size() > 1) {
            double ss = 0.0;
            for (double v : values) ss += (v - stats.mean) * (v - stats.mean);
            stats.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
        }
        experiment.aggregate[name] = stats;
    }
    return experiment;
}

} // namespace autopipe
