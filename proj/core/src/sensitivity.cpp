#include "autopipe/sensitivity.hpp"

#include "autopipe/common.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace autopipe {

namespace {

bool is_constant(std::span<const double> v) {
    for (double x : v) {
        if (x != v[0]) return false;
    }
    return true;
}

double pearson(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    double mean_a = 0.0, mean_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_a += a[i];
        mean_b += b[i];
    }
    mean_a /= static_cast<double>(n);
    mean_b /= static_cast<double>(n);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a[i] - mean_a;
        const double db = b[i] - mean_b;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    const double den = std::sqrt(saa * sbb);
    if (den == 0.0) return 0.0;
    return sab / den;
}

// Modified Gram-Schmidt orthonormal basis of the given columns, processed in
// order so that a column collinear with earlier ones is the one dropped.
std::vector<std::vector<double>> orthonormal_basis(
    const std::vector<std::vector<double>>& columns) {
    std::vector<std::vector<double>> basis;
    for (const auto& col : columns) {
        std::vector<double> v = col;
        double orig_norm2 = std::inner_product(v.begin(), v.end(), v.begin(), 0.0);
        // Two MGS passes for numerical stability.
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& q : basis) {
                const double proj = std::inner_product(v.begin(), v.end(), q.begin(), 0.0);
                for (std::size_t i = 0; i < v.size(); ++i) v[i] -= proj * q[i];
            }
        }
        const double norm2 = std::inner_product(v.begin(), v.end(), v.begin(), 0.0);
        if (orig_norm2 == 0.0 || norm2 <= 1e-20 * orig_norm2) continue; // collinear, drop
        const double inv = 1.0 / std::sqrt(norm2);
        for (double& x : v) x *= inv;
        basis.push_back(std::move(v));
    }
    return basis;
}

std::vector<double> residual(std::span<const double> target,
                             const std::vector<std::vector<double>>& basis) {
    std::vector<double> r(target.begin(), target.end());
    for (const auto& q : basis) {
        const double proj = std::inner_product(r.begin(), r.end(), q.begin(), 0.0);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] -= proj * q[i];
    }
    return r;
}

} // namespace

std::vector<double> rank_column(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + 1 + j + 1);
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
        i = j + 1;
    }
    return ranks;
}

Matrix rank_transform(const Matrix& columns) {
    if (columns.rows < 3) throw DataError("rank_transform requires at least 3 rows");
    Matrix out(columns.rows, columns.cols);
    for (std::size_t c = 0; c < columns.cols; ++c) {
        const auto ranks = rank_column(columns.column(c));
        for (std::size_t r = 0; r < columns.rows; ++r) out.at(r, c) = ranks[r];
    }
    return out;
}

PrccReport prcc(const Matrix& X, std::span<const double> y) {
    const std::size_t n = X.rows;
    const std::size_t k = X.cols;
    if (y.size() != n) throw DataError("prcc: X rows and y length differ");
    if (n < k + 3) {
        throw DataError("prcc requires n >= k + 3 samples (" + std::to_string(n) + " < " +
                        std::to_string(k + 3) + ")");
    }

    PrccReport report;
    report.stages.resize(k);

    std::vector<bool> degenerate(k);
    bool any_live = false;
    for (std::size_t c = 0; c < k; ++c) {
        degenerate[c] = is_constant(X.column(c));
        report.stages[c].degenerate = degenerate[c];
        any_live = any_live || !degenerate[c];
    }
    if (!any_live) throw DataError("prcc: all input columns are constant");

    const Matrix ranked = rank_transform(X);
    const std::vector<double> y_ranked = rank_column(y);
    const std::vector<double> ones(n, 1.0);

    for (std::size_t i = 0; i < k; ++i) {
        if (degenerate[i]) continue;
        std::vector<std::vector<double>> covariates;
        covariates.push_back(ones);
        for (std::size_t j = 0; j < k; ++j) {
            if (j != i) covariates.push_back(ranked.column(j));
        }
        const auto basis = orthonormal_basis(covariates);
        const auto eps = residual(ranked.column(i), basis);
        const auto delta = residual(y_ranked, basis);
        double coef = pearson(eps, delta);
        coef = std::clamp(coef, -1.0, 1.0);
        report.stages[i].coefficient = coef;
    }

    // Influence ranks: non-degenerate stages by |coefficient| descending,
    // ties by stage order; degenerate stages trail in stage order.
    std::vector<std::size_t> order(k);
    for (std::size_t i = 0; i < k; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (degenerate[a] != degenerate[b]) return !degenerate[a];
        return std::abs(report.stages[a].coefficient) > std::abs(report.stages[b].coefficient);
    });
    for (std::size_t pos = 0; pos < k; ++pos) {
        report.stages[order[pos]].influence_rank = static_cast<int>(pos + 1);
    }
    return report;
}

std::vector<int> top_m(const PrccReport& report, int m) {
    if (m < 1) throw DataError("top_m requires m >= 1");
    std::vector<int> live;
    for (int i = 0; i < static_cast<int>(report.stages.size()); ++i) {
        if (!report.stages[i].degenerate) live.push_back(i);
    }
    std::stable_sort(live.begin(), live.end(), [&](int a, int b) {
        return std::abs(report.stages[a].coefficient) > std::abs(report.stages[b].coefficient);
    });
    if (static_cast<int>(live.size()) > m) live.resize(m);
    return live;
}

} // namespace autopipe
