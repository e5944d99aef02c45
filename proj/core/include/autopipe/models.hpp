#pragma once

#include "autopipe/matrix.hpp"
#include "autopipe/metrics.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace autopipe {

enum class ModelKind {
    logistic_regression,
    decision_tree,
    random_forest,
    gaussian_naive_bayes,
    k_nearest_neighbors,
};

const std::vector<ModelKind>& all_model_kinds();
std::string to_string(ModelKind kind);
std::optional<ModelKind> model_from_string(const std::string& name);

/// Chosen hyperparameter values; ordered map so serialization is stable.
using HyperParams = std::map<std::string, double>;

/// Trained classifier interface: a continuous score in [0,1] per row.
class Classifier {
public:
    virtual ~Classifier() = default;
    virtual std::vector<double> score(const Matrix& X) const = 0;
};

struct FittedModel {
    ModelKind kind{};
    HyperParams hyperparameters;
    std::size_t train_feature_count = 0;
    std::shared_ptr<const Classifier> impl;
};

struct Prediction {
    std::vector<std::uint8_t> labels;
    std::vector<double> scores;
};

struct CvConfig {
    int folds = 5;
    int budget = 20;
    /// Multiple metrics aggregate by unweighted mean.
    std::vector<MetricKind> scoring = {MetricKind::balanced_accuracy};
    std::uint64_t seed = 0;
};

/// One draw from the model's default hyperparameter space.
HyperParams draw_hyperparams(ModelKind kind, class Rng& rng);

/// Train with explicit hyperparameters. Deterministic for a fixed seed.
FittedModel fit_model(ModelKind kind, const Matrix& X, std::span<const std::uint8_t> y,
                      const HyperParams& params, std::uint64_t seed);

/// Randomized hyperparameter search with stratified k-fold cross-validation:
/// `budget` seeded draws, each scored by the fold-mean of the scoring
/// metric(s); the best draw (ties: earlier draw) is refit on the full
/// training matrix. Returns the refit model and its CV score.
std::pair<FittedModel, double> random_search_fit(ModelKind kind, const Matrix& X,
                                                 std::span<const std::uint8_t> y,
                                                 const CvConfig& cv);

/// Hard labels at the fixed 0.5 threshold plus the raw scores.
Prediction predict(const FittedModel& model, const Matrix& X);

/// Stratified fold assignment: per-class seeded shuffle, round-robin deal.
/// Returns the validation row indices of each fold.
std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const std::uint8_t> y,
                                                       int folds, std::uint64_t seed);

// --- logistic regression internals, exposed for numerical checks --------

/// Mean penalized log-loss; weights exclude the intercept from the penalty.
double logistic_loss(const Matrix& X, std::span<const std::uint8_t> y,
                     std::span<const double> w, double bias, double l2);

/// Analytic gradient of logistic_loss, filled into grad_w / grad_bias.
void logistic_gradient(const Matrix& X, std::span<const std::uint8_t> y,
                       std::span<const double> w, double bias, double l2,
                       std::span<double> grad_w, double& grad_bias);

// --- tree internals, exposed so the forest equivalence is testable ------

struct TreeOptions {
    int max_depth = -1; // <0 means unlimited
    int min_leaf = 1;
    /// Features considered per split: fraction of all features, in (0,1].
    double feature_fraction = 1.0;
    bool bootstrap = false;
};

std::unique_ptr<Classifier> fit_decision_tree(const Matrix& X, std::span<const std::uint8_t> y,
                                              const TreeOptions& options, std::uint64_t seed);
std::unique_ptr<Classifier> fit_random_forest(const Matrix& X, std::span<const std::uint8_t> y,
                                              int n_trees, const TreeOptions& options,
                                              std::uint64_t seed);

} // namespace autopipe
