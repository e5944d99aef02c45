#include "autopipe/common.hpp"
#include "autopipe/rng.hpp"

#include "preprocess_detail.hpp"

#include <algorithm>
#include <cmath>

namespace autopipe::detail {

namespace {

double euclidean2(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double d = a[j] - b[j];
        sum += d * d;
    }
    return sum;
}

Matrix rows_subset(const Matrix& cells, const std::vector<std::size_t>& rows) {
    Matrix out(rows.size(), cells.cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto src = cells.row(rows[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

BalanceOutcome oversample(const Matrix& cells, const std::vector<std::uint8_t>& labels,
                          const std::vector<std::size_t>& minority,
                          const std::vector<std::size_t>& majority, Rng& rng) {
    BalanceOutcome out;
    out.cells = cells;
    out.labels = labels;
    const std::uint8_t minority_label = labels[minority.front()];
    for (std::size_t t = minority.size(); t < majority.size(); ++t) {
        const std::size_t src = minority[rng.next_below(minority.size())];
        out.cells.rows += 1;
        const auto row = cells.row(src);
        out.cells.data.insert(out.cells.data.end(), row.begin(), row.end());
        out.labels.push_back(minority_label);
    }
    return out;
}

} // namespace

BalanceOutcome apply_balancing(const MethodDescriptor& method,
                               const std::vector<ColumnSchema>& schema, Matrix cells,
                               std::vector<std::uint8_t> labels, std::uint64_t seed) {
    if (method.name == "none") {
        return {std::move(cells), std::move(labels), {}};
    }

    std::vector<std::size_t> pos_rows, neg_rows;
    for (std::size_t r = 0; r < labels.size(); ++r) {
        (labels[r] ? pos_rows : neg_rows).push_back(r);
    }
    const bool pos_is_minority = pos_rows.size() <= neg_rows.size();
    const auto& minority = pos_is_minority ? pos_rows : neg_rows;
    const auto& majority = pos_is_minority ? neg_rows : pos_rows;

    if (minority.size() == majority.size() || minority.empty()) {
        return {std::move(cells), std::move(labels), {}};
    }

    Rng rng(mix64(seed, 0x62616cu));

    if (method.name == "random_oversample") {
        return oversample(cells, labels, minority, majority, rng);
    }

    if (method.name == "random_undersample") {
        std::vector<std::size_t> kept_majority = majority;
        rng.shuffle(kept_majority);
        kept_majority.resize(minority.size());
        std::vector<std::size_t> keep = minority;
        keep.insert(keep.end(), kept_majority.begin(), kept_majority.end());
        std::sort(keep.begin(), keep.end());
        BalanceOutcome out;
        out.cells = rows_subset(cells, keep);
        out.labels.reserve(keep.size());
        for (std::size_t r : keep) out.labels.push_back(labels[r]);
        return out;
    }

    if (method.name == "smote") {
        const int k_configured = static_cast<int>(method.param("k", 5));
        BalanceOutcome out;

        if (minority.size() < 2) {
            out = oversample(cells, labels, minority, majority, rng);
            out.audit.push_back({"balancing",
                                 "smote fallback to random_oversample: minority count " +
                                     std::to_string(minority.size()) + " < 2"});
            return out;
        }

        int k = k_configured;
        if (static_cast<std::size_t>(k) >= minority.size()) {
            k = static_cast<int>(minority.size()) - 1;
            out.audit.push_back({"balancing", "smote k reduced from " +
                                                  std::to_string(k_configured) + " to " +
                                                  std::to_string(k) + " (minority count " +
                                                  std::to_string(minority.size()) + ")"});
        }

        // Neighbor lists among minority rows, ties by row order. Cells are
        // already an ordinal-encoded numeric view, so plain euclidean works;
        // synthetic categorical codes snap to the nearest valid code below.
        const std::size_t m = minority.size();
        std::vector<std::vector<std::size_t>> neighbors(m);
        for (std::size_t i = 0; i < m; ++i) {
            std::vector<std::pair<double, std::size_t>> dist;
            dist.reserve(m - 1);
            for (std::size_t j = 0; j < m; ++j) {
                if (j == i) continue;
                dist.emplace_back(euclidean2(cells.row(minority[i]), cells.row(minority[j])), j);
            }
            std::sort(dist.begin(), dist.end());
            neighbors[i].reserve(k);
            for (int t = 0; t < k; ++t) neighbors[i].push_back(dist[t].second);
        }

        out.cells = cells;
        out.labels = labels;
        const std::uint8_t minority_label = labels[minority.front()];
        for (std::size_t t = minority.size(); t < majority.size(); ++t) {
            const std::size_t base = rng.next_below(m);
            const std::size_t other = neighbors[base][rng.next_below(neighbors[base].size())];
            const double gamma = rng.next_double();
            const auto a = cells.row(minority[base]);
            const auto b = cells.row(minority[other]);
            std::vector<double> synth(cells.cols);
            for (std::size_t c = 0; c < cells.cols; ++c) {
                double v = a[c] + gamma * (b[c] - a[c]);
                if (schema[c].kind == ColumnKind::categorical) {
                    v = static_cast<double>(std::llround(v));
                }
                synth[c] = v;
            }
            out.cells.rows += 1;
            out.cells.data.insert(out.cells.data.end(), synth.begin(), synth.end());
            out.labels.push_back(minority_label);
        }
        return out;
    }

    throw ConfigError("unknown balancing method: " + method.name);
}

} // namespace autopipe::detail
