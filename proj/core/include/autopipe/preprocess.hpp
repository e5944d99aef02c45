#pragma once

#include "autopipe/dataset.hpp"
#include "autopipe/matrix.hpp"
#include "autopipe/pipeline_spec.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace autopipe {

/// One preprocessing method: registry name plus fixed internal parameters.
struct MethodDescriptor {
    std::string name;
    std::map<std::string, double> params;

    double param(const std::string& key, double fallback) const {
        auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    }
};

/// Ordered method lists, one per stage. Index (stage, i) identifies a method;
/// list order is stable for a given configuration.
struct StageCatalog {
    std::array<std::vector<MethodDescriptor>, kNumStages> stages;

    const MethodDescriptor& method(int stage, int index) const {
        return stages[stage][index];
    }
    std::vector<int> step_sizes() const {
        std::vector<int> out(kNumStages);
        for (int s = 0; s < kNumStages; ++s) out[s] = static_cast<int>(stages[s].size());
        return out;
    }
    std::size_t space_size() const {
        std::size_t n = 1;
        for (const auto& s : stages) n *= s.size();
        return n;
    }
    void validate_spec(const PipelineSpec& spec) const;
};

/// Per-stage overrides from the run config; unset stages use the defaults.
struct CatalogConfig {
    std::array<std::optional<std::vector<MethodDescriptor>>, kNumStages> stages;
};

/// Valid method names per stage, catalog order.
const std::vector<std::string>& stage_method_registry(int stage);

StageCatalog default_catalog();
StageCatalog make_catalog(const CatalogConfig& config);

struct AuditEvent {
    std::string stage;
    std::string message;
};

struct TransformResult {
    Matrix features;
    std::vector<std::uint8_t> labels;
    /// Categories seen at transform time but absent from training.
    std::size_t unknown_categories = 0;
};

// --- fitted per-stage state --------------------------------------------

struct ImputerState {
    std::string method;
    std::vector<double> fill; // per column: numeric fill value or mode code
    int knn_k = 0;
    Matrix knn_reference; // training numeric cells, missing kept as NaN
    std::vector<std::size_t> numeric_cols;
};

struct EncoderState {
    std::string method;
    /// Per dataset column: category codes present in the training rows,
    /// ascending. Transform-time codes outside this list map to an explicit
    /// unknown code and are counted.
    std::vector<std::vector<int>> train_codes;
    std::vector<std::string> feature_names;
    /// Dataset column index pairs whose products are appended.
    std::vector<std::pair<std::size_t, std::size_t>> interaction_pairs;
};

struct ScalerState {
    std::string method;
    std::vector<double> offset;
    std::vector<double> scale; // 0 marks a constant column, output maps to 0
};

struct SelectorState {
    std::string method;
    std::vector<std::size_t> keep; // ascending indices into scaled columns
};

/// Everything fitted from training data that transform() needs. Confined to
/// one worker while fitting, immutable afterwards.
struct FittedPipeline {
    PipelineSpec spec;
    std::array<std::string, kNumStages> method_names;
    std::vector<ColumnSchema> schema; // training schema; transform input must match
    ImputerState imputer;
    std::string balancing;
    EncoderState encoder;
    ScalerState scaler;
    SelectorState selector;
    std::vector<std::string> feature_names; // post-selection
    std::vector<AuditEvent> audit;          // fallbacks and adjustments

    std::string describe() const;
};

/// Fit all five stages on training data, in order, and return the fitted
/// pipeline plus the transformed training matrix. Balancing changes only
/// training rows. Deterministic for a fixed seed.
std::pair<FittedPipeline, TransformResult> fit_apply(const PipelineSpec& spec,
                                                     const StageCatalog& catalog,
                                                     const TabularDataset& train,
                                                     std::uint64_t seed);

/// Apply training-fitted state to evaluation data. Balancing is a no-op;
/// row count and labels pass through unchanged.
TransformResult transform(const FittedPipeline& fp, const TabularDataset& eval_ds);

} // namespace autopipe
