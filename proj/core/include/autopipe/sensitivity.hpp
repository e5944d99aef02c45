#pragma once

#include "autopipe/matrix.hpp"

#include <span>
#include <string>
#include <vector>

namespace autopipe {

/// Average ranks (1..n, ties share the mean rank) of one column.
std::vector<double> rank_column(std::span<const double> values);

/// Per-column rank transform; requires n >= 3 rows.
Matrix rank_transform(const Matrix& columns);

struct PrccStage {
    double coefficient = 0.0;
    int influence_rank = 0; // 1 = most influential
    bool degenerate = false; // constant input column
};

struct PrccReport {
    std::vector<PrccStage> stages;
    std::vector<std::string> warnings;

    std::size_t non_degenerate_count() const {
        std::size_t n = 0;
        for (const auto& s : stages) n += !s.degenerate;
        return n;
    }
};

/// Partial rank correlation of each column of X against y:
/// both sides are rank-transformed, each X_i and y are regressed (least
/// squares with intercept) on the remaining ranked columns, and the
/// coefficient is the Pearson correlation of the two residuals. Constant
/// columns get coefficient 0 and the degenerate flag. Collinear covariates
/// are dropped, keeping the smallest column index.
PrccReport prcc(const Matrix& X, std::span<const double> y);

/// Indices of the m most influential stages by |coefficient|, ties broken by
/// stage order, degenerate stages excluded. Returns fewer than m (all
/// non-degenerate stages) when m exceeds the non-degenerate count.
std::vector<int> top_m(const PrccReport& report, int m);

} // namespace autopipe
