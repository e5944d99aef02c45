#include "autopipe/common.hpp"
#include "autopipe/preprocess.hpp"

#include "preprocess_detail.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace autopipe::detail {

namespace {

double column_mean(const Matrix& cells, std::size_t c) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t r = 0; r < cells.rows; ++r) {
        const double v = cells.at(r, c);
        if (!cell_missing(v)) {
            sum += v;
            ++n;
        }
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double column_median(const Matrix& cells, std::size_t c) {
    std::vector<double> vals;
    vals.reserve(cells.rows);
    for (std::size_t r = 0; r < cells.rows; ++r) {
        const double v = cells.at(r, c);
        if (!cell_missing(v)) vals.push_back(v);
    }
    if (vals.empty()) return 0.0;
    std::sort(vals.begin(), vals.end());
    const std::size_t n = vals.size();
    return n % 2 ? vals[n / 2] : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
}

/// Most frequent category code; ties resolve to the lowest code.
double column_mode(const Matrix& cells, std::size_t c) {
    std::map<std::int64_t, std::size_t> counts;
    for (std::size_t r = 0; r < cells.rows; ++r) {
        const double v = cells.at(r, c);
        if (!cell_missing(v)) ++counts[static_cast<std::int64_t>(v)];
    }
    if (counts.empty()) return 0.0;
    std::int64_t best = counts.begin()->first;
    std::size_t best_count = counts.begin()->second;
    for (const auto& [code, count] : counts) {
        if (count > best_count) {
            best = code;
            best_count = count;
        }
    }
    return static_cast<double>(best);
}

/// Squared nan-euclidean distance over the numeric columns: squared diffs of
/// mutually present cells, rescaled by n_cols / n_present. Infinity when
/// nothing is mutually present.
double nan_distance2(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    std::size_t present = 0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        if (cell_missing(a[j]) || cell_missing(b[j])) continue;
        const double d = a[j] - b[j];
        sum += d * d;
        ++present;
    }
    if (present == 0) return std::numeric_limits<double>::infinity();
    return sum * static_cast<double>(a.size()) / static_cast<double>(present);
}

} // namespace

ImputerState fit_imputer(const MethodDescriptor& method,
                         const std::vector<ColumnSchema>& schema, const Matrix& cells) {
    ImputerState state;
    state.method = method.name;
    state.fill.resize(schema.size());

    for (std::size_t c = 0; c < schema.size(); ++c) {
        if (schema[c].kind == ColumnKind::categorical) {
            // Numeric strategies are undefined for categories; always mode.
            state.fill[c] = column_mode(cells, c);
        } else if (method.name == "mean" || method.name == "knn") {
            state.fill[c] = column_mean(cells, c); // knn falls back to the mean
        } else if (method.name == "median") {
            state.fill[c] = column_median(cells, c);
        } else if (method.name == "constant") {
            state.fill[c] = 0.0;
        } else {
            throw ConfigError("unknown imputation method: " + method.name);
        }
    }

    if (method.name == "knn") {
        state.knn_k = static_cast<int>(method.param("k", 5));
        for (std::size_t c = 0; c < schema.size(); ++c) {
            if (schema[c].kind == ColumnKind::numeric) state.numeric_cols.push_back(c);
        }
        state.knn_reference = Matrix(cells.rows, state.numeric_cols.size());
        for (std::size_t r = 0; r < cells.rows; ++r) {
            for (std::size_t j = 0; j < state.numeric_cols.size(); ++j) {
                state.knn_reference.at(r, j) = cells.at(r, state.numeric_cols[j]);
            }
        }
    }
    return state;
}

void apply_imputer(const ImputerState& state, const std::vector<ColumnSchema>& schema,
                   Matrix& cells) {
    if (state.method != "knn") {
        for (std::size_t r = 0; r < cells.rows; ++r) {
            for (std::size_t c = 0; c < cells.cols; ++c) {
                if (cell_missing(cells.at(r, c))) cells.at(r, c) = state.fill[c];
            }
        }
        return;
    }

    // kNN for numeric columns, mode for categorical ones.
    const Matrix& ref = state.knn_reference;
    std::vector<std::size_t> pos_of_col(schema.size(), SIZE_MAX);
    for (std::size_t j = 0; j < state.numeric_cols.size(); ++j) {
        pos_of_col[state.numeric_cols[j]] = j;
    }

    for (std::size_t r = 0; r < cells.rows; ++r) {
        std::vector<double> query(state.numeric_cols.size());
        bool any_numeric_missing = false;
        for (std::size_t j = 0; j < state.numeric_cols.size(); ++j) {
            query[j] = cells.at(r, state.numeric_cols[j]);
            any_numeric_missing = any_numeric_missing || cell_missing(query[j]);
        }

        std::vector<std::pair<double, std::size_t>> dist;
        if (any_numeric_missing) {
            dist.reserve(ref.rows);
            for (std::size_t t = 0; t < ref.rows; ++t) {
                const double d2 = nan_distance2(query, ref.row(t));
                if (std::isfinite(d2)) dist.emplace_back(d2, t);
            }
            std::sort(dist.begin(), dist.end()); // ties resolve to lower row index
        }

        for (std::size_t c = 0; c < cells.cols; ++c) {
            if (!cell_missing(cells.at(r, c))) continue;
            if (schema[c].kind == ColumnKind::categorical) {
                cells.at(r, c) = state.fill[c];
                continue;
            }
            const std::size_t j = pos_of_col[c];
            double sum = 0.0;
            int used = 0;
            for (const auto& [d2, t] : dist) {
                const double v = ref.at(t, j);
                if (cell_missing(v)) continue;
                sum += v;
                if (++used == state.knn_k) break;
            }
            cells.at(r, c) = used > 0 ? sum / used : state.fill[c];
        }
    }
}

} // namespace autopipe::detail
