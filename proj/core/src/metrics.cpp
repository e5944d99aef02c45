#include "autopipe/metrics.hpp"

#include "autopipe/common.hpp"

#include <algorithm>
#include <cmath>

namespace autopipe {

namespace {

// Empty denominators contribute 0: keeps every metric total so the search
// never has to special-case degenerate predictors.
double ratio_or_zero(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

double f1_of(double precision, double recall) {
    return ratio_or_zero(2.0 * precision * recall, precision + recall);
}

void check_binary(std::span<const std::uint8_t> v, const char* what) {
    for (auto x : v) {
        if (x > 1) throw DataError(std::string(what) + " contains a non-binary value");
    }
}

} // namespace

const std::vector<MetricKind>& all_metric_kinds() {
    static const std::vector<MetricKind> kinds = {
        MetricKind::balanced_accuracy, MetricKind::f1_macro, MetricKind::f_beta_0_5,
        MetricKind::mcc,               MetricKind::sensitivity, MetricKind::specificity,
        MetricKind::auc,
    };
    return kinds;
}

std::string to_string(MetricKind kind) {
    switch (kind) {
    case MetricKind::balanced_accuracy: return "balanced_accuracy";
    case MetricKind::f1_macro: return "f1_macro";
    case MetricKind::f_beta_0_5: return "f_beta_0.5";
    case MetricKind::mcc: return "mcc";
    case MetricKind::sensitivity: return "sensitivity";
    case MetricKind::specificity: return "specificity";
    case MetricKind::auc: return "auc";
    }
    return "unknown";
}

std::optional<MetricKind> metric_from_string(const std::string& name) {
    for (auto kind : all_metric_kinds()) {
        if (to_string(kind) == name) return kind;
    }
    return std::nullopt;
}

bool metric_needs_scores(MetricKind kind) { return kind == MetricKind::auc; }

ConfusionMatrix confusion(std::span<const std::uint8_t> y_true,
                          std::span<const std::uint8_t> y_pred) {
    if (y_true.size() != y_pred.size()) {
        throw DataError("confusion: label/prediction length mismatch");
    }
    if (y_true.empty()) throw DataError("confusion: empty input");
    check_binary(y_true, "y_true");
    check_binary(y_pred, "y_pred");

    ConfusionMatrix cm;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] == 1) {
            y_pred[i] == 1 ? ++cm.tp : ++cm.fn;
        } else {
            y_pred[i] == 1 ? ++cm.fp : ++cm.tn;
        }
    }
    return cm;
}

double sensitivity(const ConfusionMatrix& cm) {
    return ratio_or_zero(static_cast<double>(cm.tp), static_cast<double>(cm.tp + cm.fn));
}

double specificity(const ConfusionMatrix& cm) {
    return ratio_or_zero(static_cast<double>(cm.tn), static_cast<double>(cm.tn + cm.fp));
}

double balanced_accuracy(const ConfusionMatrix& cm) {
    return 0.5 * (sensitivity(cm) + specificity(cm));
}

double f1_macro(const ConfusionMatrix& cm) {
    const double prec_pos = ratio_or_zero(cm.tp, static_cast<double>(cm.tp + cm.fp));
    const double rec_pos = sensitivity(cm);
    const double prec_neg = ratio_or_zero(cm.tn, static_cast<double>(cm.tn + cm.fn));
    const double rec_neg = specificity(cm);
    return 0.5 * (f1_of(prec_pos, rec_pos) + f1_of(prec_neg, rec_neg));
}

double f_beta(const ConfusionMatrix& cm, double beta) {
    if (!(beta > 0.0)) throw DataError("f_beta requires beta > 0");
    const double precision = ratio_or_zero(cm.tp, static_cast<double>(cm.tp + cm.fp));
    const double recall = sensitivity(cm);
    const double b2 = beta * beta;
    return ratio_or_zero((1.0 + b2) * precision * recall, b2 * precision + recall);
}

double mcc(const ConfusionMatrix& cm) {
    const double tp = static_cast<double>(cm.tp), fn = static_cast<double>(cm.fn);
    const double tn = static_cast<double>(cm.tn), fp = static_cast<double>(cm.fp);
    const double den =
        std::sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn));
    return den == 0.0 ? 0.0 : (tp * tn - fp * fn) / den;
}

double auc_from_scores(std::span<const std::uint8_t> y_true, std::span<const double> scores) {
    if (y_true.size() != scores.size()) throw DataError("auc: label/score length mismatch");
    if (y_true.empty()) throw DataError("auc: empty input");
    check_binary(y_true, "y_true");

    std::size_t n_pos = 0;
    for (auto y : y_true) n_pos += y;
    const std::size_t n_neg = y_true.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) throw DataError("AUC undefined: only one class present");

    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] < scores[b];
    });

    // Average ranks over tie groups, accumulate positive ranks.
    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j + 1);
        for (std::size_t t = i; t <= j; ++t) {
            if (y_true[order[t]] == 1) pos_rank_sum += avg_rank;
        }
        i = j + 1;
    }
    const double n_pos_d = static_cast<double>(n_pos);
    return (pos_rank_sum - n_pos_d * (n_pos_d + 1.0) / 2.0) /
           (n_pos_d * static_cast<double>(n_neg));
}

double evaluate(MetricKind kind, std::span<const std::uint8_t> y_true,
                std::span<const std::uint8_t> y_pred, std::span<const double> scores) {
    if (kind == MetricKind::auc) {
        if (scores.empty()) throw DataError("auc requires scores");
        return auc_from_scores(y_true, scores);
    }
    const ConfusionMatrix cm = confusion(y_true, y_pred);
    switch (kind) {
    case MetricKind::balanced_accuracy: return balanced_accuracy(cm);
    case MetricKind::f1_macro: return f1_macro(cm);
    case MetricKind::f_beta_0_5: return f_beta(cm, 0.5);
    case MetricKind::mcc: return mcc(cm);
    case MetricKind::sensitivity: return sensitivity(cm);
    case MetricKind::specificity: return specificity(cm);
    case MetricKind::auc: break;
    }
    throw Error("unhandled metric kind");
}

} // namespace autopipe
