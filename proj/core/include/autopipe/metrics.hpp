#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace autopipe {

struct ConfusionMatrix {
    std::size_t tp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;
    std::size_t fp = 0;

    std::size_t total() const { return tp + fn + tn + fp; }
};

enum class MetricKind {
    balanced_accuracy,
    f1_macro,
    f_beta_0_5,
    mcc,
    sensitivity,
    specificity,
    auc,
};

const std::vector<MetricKind>& all_metric_kinds();
std::string to_string(MetricKind kind);
std::optional<MetricKind> metric_from_string(const std::string& name);
bool metric_needs_scores(MetricKind kind);

ConfusionMatrix confusion(std::span<const std::uint8_t> y_true,
                          std::span<const std::uint8_t> y_pred);

double sensitivity(const ConfusionMatrix& cm);
double specificity(const ConfusionMatrix& cm);
double balanced_accuracy(const ConfusionMatrix& cm);
double f1_macro(const ConfusionMatrix& cm);
/// Positive-class F-beta; beta weights recall over precision.
double f_beta(const ConfusionMatrix& cm, double beta);
double mcc(const ConfusionMatrix& cm);

/// Rank-statistic AUC; tied scores share average ranks. Throws when only one
/// class is present ("AUC undefined").
double auc_from_scores(std::span<const std::uint8_t> y_true, std::span<const double> scores);

/// Dispatch on kind. scores may be empty except for AUC.
double evaluate(MetricKind kind, std::span<const std::uint8_t> y_true,
                std::span<const std::uint8_t> y_pred,
                std::span<const double> scores = {});

} // namespace autopipe
