#pragma once

#include "autopipe/dataset.hpp"
#include "autopipe/metrics.hpp"
#include "autopipe/models.hpp"
#include "autopipe/preprocess.hpp"
#include "autopipe/sampling.hpp"
#include "autopipe/sensitivity.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace autopipe {

struct SearchConfig {
    StageCatalog catalog = default_catalog();
    std::vector<ModelKind> models = all_model_kinds();
    std::vector<MetricKind> metrics = all_metric_kinds();
    /// Aggregated by unweighted mean; must be a subset of `metrics`.
    std::vector<MetricKind> target_metrics = {MetricKind::balanced_accuracy};
    std::size_t n_samples = 0; // 0: 4 * max(N_s), capped by the space size
    int top_m = 2;
    std::size_t refinement_budget = 64;
    int cv_folds = 5;
    int cv_budget = 20;
    std::uint64_t seed = 42;
    double test_fraction = 1.0 / 3.0;
    double subsample_fraction = 1.0;
    /// Share of the training partition held out for pipeline selection.
    double validation_fraction = 0.25;
    int workers = 0; // 0: hardware concurrency; affects speed, never results

    void validate() const;
    std::size_t resolved_n_samples() const;
};

/// One evaluated pipeline. values is models x metrics in the order the lists
/// were passed; NaN marks a value that was not computed. A failed evaluation
/// keeps its row with the reason, never silently dropped.
struct ResultsRow {
    PipelineSpec spec;
    std::string provenance; // "lhs" | "refinement"
    std::uint64_t pipeline_seed = 0;
    bool failed = false;
    std::string failure_reason;
    std::vector<std::vector<double>> values;
    std::vector<AuditEvent> audit;
};

struct ResultsTable {
    std::vector<ModelKind> models;
    std::vector<MetricKind> metrics;
    std::vector<ResultsRow> rows;
};

struct SearchReport {
    // Winner
    PipelineSpec winner_spec;
    std::array<std::string, kNumStages> winner_methods;
    ModelKind winner_model{};
    HyperParams winner_hyperparameters;
    double winner_validation_target = 0.0;
    double winner_cv_score = 0.0;
    std::string winner_provenance;
    std::string winner_pipeline_description;
    std::vector<std::string> winner_feature_names;
    /// Full panel on the held-out test partition, metric name -> value.
    std::map<std::string, double> test_metrics;

    // Phase artifacts
    LhsDesign design;
    ResultsTable table;
    ModelKind locked_model{};
    bool prcc_computed = false;
    PrccReport prcc_report;
    std::vector<int> refined_stages;
    PipelineSpec incumbent_spec;
    double incumbent_target = 0.0;

    // Audit trail
    std::uint64_t seed = 0;
    std::size_t train_rows = 0;
    std::size_t test_rows = 0;
    std::vector<std::string> warnings;
    /// Wall-clock phase timings; reported in the text summary only so the
    /// machine-readable report stays byte-identical across runs.
    std::vector<std::pair<std::string, double>> timings_sec;
};

struct SearchHooks {
    /// Fires after phases (a)-(e), immediately before the winner is retrained
    /// on the full training partition and the test partition is first read.
    std::function<void()> before_final_retrain;
};

/// Evaluate one pipeline: fit on an internal 75/25 stratified split of the
/// training partition, train every model with randomized CV search, score all
/// metrics on the validation part. Every random choice derives from
/// hash(global_seed, spec), so results are independent of scheduling order.
/// The test partition is never touched.
ResultsRow evaluate_pipeline(const PipelineSpec& spec, const StageCatalog& catalog,
                             const SplitPair& split, const std::vector<ModelKind>& models,
                             const std::vector<MetricKind>& metrics,
                             const std::vector<MetricKind>& cv_scoring, int cv_folds,
                             int cv_budget, std::uint64_t global_seed,
                             double validation_fraction = 0.25);

SearchReport run_search(const SearchConfig& config, const TabularDataset& dataset);
SearchReport run_search_on_split(const SearchConfig& config, const SplitPair& split,
                                 const SearchHooks* hooks = nullptr);

struct MetricStats {
    double mean = 0.0;
    double stddev = 0.0;
};

struct ExperimentRun {
    bool ok = false;
    std::string error;
    std::uint64_t seed = 0;
    SearchReport report; // valid when ok
};

struct ExperimentReport {
    int runs = 0;
    std::uint64_t base_seed = 0;
    std::vector<ExperimentRun> per_run;
    /// Over successful runs' test panels, metric name -> mean/std.
    std::map<std::string, MetricStats> aggregate;
    std::vector<std::string> warnings;
};

/// Repeat run_search with seeds base..base+runs-1, each with a fresh
/// stratified split; aggregate per-metric mean and standard deviation.
ExperimentReport run_experiment(const SearchConfig& config, const TabularDataset& dataset,
                                int runs);

/// Mean of the target metrics for one model in a row; NaN when unavailable.
double row_target_value(const ResultsRow& row, std::size_t model_index,
                        const std::vector<std::size_t>& target_positions);

} // namespace autopipe
