#include "autopipe/preprocess.hpp"

#include "autopipe/common.hpp"
#include "autopipe/rng.hpp"

#include "preprocess_detail.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace autopipe {

namespace detail {

namespace {

double pop_variance(std::span<const double> v, double* mean_out = nullptr) {
    const std::size_t n = v.size();
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double x : v) {
        const double d = x - mean;
        ss += d * d;
    }
    if (mean_out) *mean_out = mean;
    return ss / static_cast<double>(n);
}

double pearson_abs(std::span<const double> x, std::span<const std::uint8_t> y) {
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    const double den = std::sqrt(sxx * syy);
    return den == 0.0 ? 0.0 : std::abs(sxy / den);
}

/// Equal-frequency binning followed by mutual information against the binary
/// label, in nats.
double mutual_info(std::span<const double> x, std::span<const std::uint8_t> y, int bins) {
    std::vector<double> sorted(x.begin(), x.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> edges;
    for (int b = 1; b < bins; ++b) {
        const double e = quantile_sorted(sorted, static_cast<double>(b) / bins);
        if (edges.empty() || e > edges.back()) edges.push_back(e);
    }
    const std::size_t n_bins = edges.size() + 1;

    std::vector<std::array<double, 2>> joint(n_bins, {0.0, 0.0});
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto b = static_cast<std::size_t>(
            std::upper_bound(edges.begin(), edges.end(), x[i]) - edges.begin());
        joint[b][y[i]] += 1.0;
    }
    const double n = static_cast<double>(x.size());
    std::array<double, 2> p_y = {0.0, 0.0};
    for (const auto& row : joint) {
        p_y[0] += row[0];
        p_y[1] += row[1];
    }
    double mi = 0.0;
    for (const auto& row : joint) {
        const double p_b = (row[0] + row[1]) / n;
        if (p_b == 0.0) continue;
        for (int c = 0; c < 2; ++c) {
            if (row[c] == 0.0 || p_y[c] == 0.0) continue;
            const double p = row[c] / n;
            mi += p * std::log(p / (p_b * (p_y[c] / n)));
        }
    }
    return mi;
}

std::vector<std::size_t> top_k_by_score(const std::vector<double>& scores, std::size_t k) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b]; // ties keep lower index first
    });
    order.resize(std::min(k, order.size()));
    std::sort(order.begin(), order.end());
    return order;
}

} // namespace

double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

EncoderState fit_encoder(const MethodDescriptor& method,
                         const std::vector<ColumnSchema>& schema, const Matrix& cells) {
    EncoderState state;
    state.method = method.name;
    state.train_codes.resize(schema.size());

    for (std::size_t c = 0; c < schema.size(); ++c) {
        if (schema[c].kind != ColumnKind::categorical) continue;
        std::vector<int> codes;
        for (std::size_t r = 0; r < cells.rows; ++r) {
            codes.push_back(static_cast<int>(cells.at(r, c)));
        }
        std::sort(codes.begin(), codes.end());
        codes.erase(std::unique(codes.begin(), codes.end()), codes.end());
        state.train_codes[c] = std::move(codes);
    }

    const bool one_hot = method.name != "ordinal";
    for (std::size_t c = 0; c < schema.size(); ++c) {
        if (schema[c].kind == ColumnKind::numeric || !one_hot) {
            state.feature_names.push_back(schema[c].name);
        } else {
            for (int code : state.train_codes[c]) {
                state.feature_names.push_back(schema[c].name + "=" +
                                              schema[c].categories[code]);
            }
        }
    }
    if (method.name == "one_hot_interactions") {
        for (std::size_t a = 0; a < schema.size(); ++a) {
            if (schema[a].kind != ColumnKind::numeric) continue;
            for (std::size_t b = a + 1; b < schema.size(); ++b) {
                if (schema[b].kind != ColumnKind::numeric) continue;
                state.interaction_pairs.emplace_back(a, b);
                state.feature_names.push_back(schema[a].name + "*" + schema[b].name);
            }
        }
    }
    return state;
}

Matrix apply_encoder(const EncoderState& state, const std::vector<ColumnSchema>& schema,
                     const Matrix& cells, std::size_t* unknown_count) {
    const bool one_hot = state.method != "ordinal";
    Matrix out(cells.rows, state.feature_names.size());

    for (std::size_t r = 0; r < cells.rows; ++r) {
        std::size_t o = 0;
        for (std::size_t c = 0; c < schema.size(); ++c) {
            const double v = cells.at(r, c);
            if (schema[c].kind == ColumnKind::numeric) {
                out.at(r, o++) = v;
                continue;
            }
            const auto& codes = state.train_codes[c];
            const auto it = std::lower_bound(codes.begin(), codes.end(), static_cast<int>(v));
            const bool known = it != codes.end() && *it == static_cast<int>(v);
            if (!known && unknown_count) ++(*unknown_count);
            if (!one_hot) {
                // Re-encode by training position; the explicit unknown code is
                // one past the last training category.
                out.at(r, o++) = known ? static_cast<double>(it - codes.begin())
                                       : static_cast<double>(codes.size());
            } else {
                const std::size_t hot = known ? static_cast<std::size_t>(it - codes.begin())
                                              : codes.size(); // all-zero block
                for (std::size_t t = 0; t < codes.size(); ++t) {
                    out.at(r, o++) = t == hot ? 1.0 : 0.0;
                }
            }
        }
        for (const auto& [a, b] : state.interaction_pairs) {
            out.at(r, o++) = cells.at(r, a) * cells.at(r, b);
        }
    }
    return out;
}

ScalerState fit_scaler(const MethodDescriptor& method, const Matrix& X) {
    ScalerState state;
    state.method = method.name;
    if (method.name == "none") return state;

    state.offset.resize(X.cols);
    state.scale.resize(X.cols);
    for (std::size_t c = 0; c < X.cols; ++c) {
        const auto col = X.column(c);
        if (method.name == "zscore") {
            double mean = 0.0;
            const double var = pop_variance(col, &mean);
            state.offset[c] = mean;
            state.scale[c] = std::sqrt(var);
        } else if (method.name == "minmax") {
            const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
            state.offset[c] = *lo;
            state.scale[c] = *hi - *lo;
        } else if (method.name == "median_iqr") {
            std::vector<double> sorted = col;
            std::sort(sorted.begin(), sorted.end());
            state.offset[c] = quantile_sorted(sorted, 0.5);
            state.scale[c] = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
        } else {
            throw ConfigError("unknown scaling method: " + method.name);
        }
    }
    return state;
}

Matrix apply_scaler(const ScalerState& state, const Matrix& X) {
    if (state.method == "none") return X;
    Matrix out(X.rows, X.cols);
    for (std::size_t c = 0; c < X.cols; ++c) {
        const double offset = state.offset[c];
        const double scale = state.scale[c];
        for (std::size_t r = 0; r < X.rows; ++r) {
            // Constant training columns map to 0 instead of dividing by zero.
            out.at(r, c) = scale == 0.0 ? 0.0 : (X.at(r, c) - offset) / scale;
        }
    }
    return out;
}

SelectorState fit_selector(const MethodDescriptor& method, const Matrix& X,
                           std::span<const std::uint8_t> labels) {
    SelectorState state;
    state.method = method.name;

    if (method.name == "none") {
        state.keep.resize(X.cols);
        std::iota(state.keep.begin(), state.keep.end(), 0u);
        return state;
    }
    if (method.name == "variance_threshold") {
        const double threshold = method.param("threshold", 1e-8);
        for (std::size_t c = 0; c < X.cols; ++c) {
            if (pop_variance(X.column(c)) > threshold) state.keep.push_back(c);
        }
        return state;
    }

    const std::size_t k = (X.cols + 1) / 2;
    std::vector<double> scores(X.cols);
    if (method.name == "top_k_correlation") {
        for (std::size_t c = 0; c < X.cols; ++c) {
            scores[c] = pearson_abs(X.column(c), labels);
        }
    } else if (method.name == "top_k_mutual_info") {
        const int bins = static_cast<int>(method.param("bins", 10));
        for (std::size_t c = 0; c < X.cols; ++c) {
            scores[c] = mutual_info(X.column(c), labels, bins);
        }
    } else {
        throw ConfigError("unknown selection method: " + method.name);
    }
    state.keep = top_k_by_score(scores, k);
    return state;
}

Matrix apply_selector(const SelectorState& state, const Matrix& X) {
    Matrix out(X.rows, state.keep.size());
    for (std::size_t r = 0; r < X.rows; ++r) {
        for (std::size_t i = 0; i < state.keep.size(); ++i) {
            out.at(r, i) = X.at(r, state.keep[i]);
        }
    }
    return out;
}

} // namespace detail

void StageCatalog::validate_spec(const PipelineSpec& spec) const {
    for (int s = 0; s < kNumStages; ++s) {
        const int i = spec.indices[s];
        if (i < 0 || i >= static_cast<int>(stages[s].size())) {
            throw DataError("spec index " + std::to_string(i) + " out of range for stage " +
                            stage_name(s));
        }
    }
}

const std::vector<std::string>& stage_method_registry(int stage) {
    static const std::array<std::vector<std::string>, kNumStages> registry = {{
        {"mean", "median", "constant", "knn"},
        {"none", "random_oversample", "random_undersample", "smote"},
        {"ordinal", "one_hot", "one_hot_interactions"},
        {"none", "zscore", "minmax", "median_iqr"},
        {"none", "variance_threshold", "top_k_correlation", "top_k_mutual_info"},
    }};
    return registry[stage];
}

StageCatalog default_catalog() {
    StageCatalog catalog;
    catalog.stages[0] = {{"mean", {}}, {"median", {}}, {"constant", {}}, {"knn", {{"k", 5}}}};
    catalog.stages[1] = {
        {"none", {}}, {"random_oversample", {}}, {"random_undersample", {}}, {"smote", {{"k", 5}}}};
    catalog.stages[2] = {{"ordinal", {}}, {"one_hot", {}}, {"one_hot_interactions", {}}};
    catalog.stages[3] = {{"none", {}}, {"zscore", {}}, {"minmax", {}}, {"median_iqr", {}}};
    catalog.stages[4] = {{"none", {}},
                         {"variance_threshold", {{"threshold", 1e-8}}},
                         {"top_k_correlation", {}},
                         {"top_k_mutual_info", {{"bins", 10}}}};
    return catalog;
}

StageCatalog make_catalog(const CatalogConfig& config) {
    StageCatalog catalog = default_catalog();
    for (int s = 0; s < kNumStages; ++s) {
        if (!config.stages[s]) continue;
        const auto& methods = *config.stages[s];
        if (methods.empty()) {
            throw ConfigError(std::string("stage '") + stage_name(s) +
                              "' configured with zero methods");
        }
        const auto& registry = stage_method_registry(s);
        for (const auto& m : methods) {
            if (std::find(registry.begin(), registry.end(), m.name) == registry.end()) {
                std::string valid;
                for (const auto& name : registry) {
                    if (!valid.empty()) valid += ", ";
                    valid += name;
                }
                throw ConfigError("unknown " + std::string(stage_name(s)) + " method '" +
                                  m.name + "'; valid: " + valid);
            }
        }
        catalog.stages[s] = methods;
    }
    return catalog;
}

std::pair<FittedPipeline, TransformResult> fit_apply(const PipelineSpec& spec,
                                                     const StageCatalog& catalog,
                                                     const TabularDataset& train,
                                                     std::uint64_t seed) {
    catalog.validate_spec(spec);
    if (train.n_rows() == 0) throw DataError("fit_apply on empty dataset");

    FittedPipeline fp;
    fp.spec = spec;
    fp.schema = train.schema();
    for (int s = 0; s < kNumStages; ++s) {
        fp.method_names[s] = catalog.method(s, spec.indices[s]).name;
    }

    Matrix cells(train.n_rows(), train.n_cols());
    for (std::size_t r = 0; r < train.n_rows(); ++r) {
        for (std::size_t c = 0; c < train.n_cols(); ++c) cells.at(r, c) = train.cell(r, c);
    }
    std::vector<std::uint8_t> labels = train.labels();

    fp.imputer = detail::fit_imputer(catalog.method(0, spec.indices[0]), fp.schema, cells);
    detail::apply_imputer(fp.imputer, fp.schema, cells);

    const auto& balance_method = catalog.method(1, spec.indices[1]);
    fp.balancing = balance_method.name;
    auto balanced = detail::apply_balancing(balance_method, fp.schema, std::move(cells),
                                            std::move(labels), mix64(seed, 0x666974u));
    fp.audit.insert(fp.audit.end(), balanced.audit.begin(), balanced.audit.end());

    fp.encoder = detail::fit_encoder(catalog.method(2, spec.indices[2]), fp.schema,
                                     balanced.cells);
    Matrix X = detail::apply_encoder(fp.encoder, fp.schema, balanced.cells, nullptr);
    if (X.cols == 0) throw DataError("empty feature matrix");

    fp.scaler = detail::fit_scaler(catalog.method(3, spec.indices[3]), X);
    X = detail::apply_scaler(fp.scaler, X);

    fp.selector = detail::fit_selector(catalog.method(4, spec.indices[4]), X, balanced.labels);
    X = detail::apply_selector(fp.selector, X);
    if (X.cols == 0) throw DataError("empty feature matrix");

    for (std::size_t i : fp.selector.keep) {
        fp.feature_names.push_back(fp.encoder.feature_names[i]);
    }
    return {std::move(fp), TransformResult{std::move(X), std::move(balanced.labels), 0}};
}

TransformResult transform(const FittedPipeline& fp, const TabularDataset& eval_ds) {
    if (eval_ds.schema() != fp.schema) {
        throw DataError("transform: dataset schema does not match the training schema");
    }

    Matrix cells(eval_ds.n_rows(), eval_ds.n_cols());
    for (std::size_t r = 0; r < eval_ds.n_rows(); ++r) {
        for (std::size_t c = 0; c < eval_ds.n_cols(); ++c) cells.at(r, c) = eval_ds.cell(r, c);
    }

    detail::apply_imputer(fp.imputer, fp.schema, cells);
    // Balancing changes only training rows; evaluation data passes through.
    TransformResult result;
    Matrix X = detail::apply_encoder(fp.encoder, fp.schema, cells, &result.unknown_categories);
    X = detail::apply_scaler(fp.scaler, X);
    result.features = detail::apply_selector(fp.selector, X);
    result.labels = eval_ds.labels();
    return result;
}

std::string FittedPipeline::describe() const {
    std::ostringstream os;
    os << "pipeline " << spec.to_string() << "\n";
    for (int s = 0; s < kNumStages; ++s) {
        os << "  " << stage_name(s) << ": " << method_names[s] << "\n";
    }
    os << "  features out: " << feature_names.size() << "\n";
    for (const auto& event : audit) {
        os << "  note [" << event.stage << "]: " << event.message << "\n";
    }
    return os.str();
}

} // namespace autopipe
