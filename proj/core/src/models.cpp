#include "autopipe/models.hpp"

#include "autopipe/common.hpp"
#include "autopipe/rng.hpp"

#include "models_detail.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace autopipe {

namespace {

constexpr std::uint64_t kFoldSalt = 0x666f6c64u;
constexpr std::uint64_t kDrawSalt = 0x64726177u;
constexpr std::uint64_t kFitSalt = 0x666974u;
constexpr std::uint64_t kRefitSalt = 0x7265666974u;

class GaussianNbModel final : public Classifier {
public:
    GaussianNbModel(std::array<double, 2> log_prior, Matrix mean, Matrix var)
        : log_prior_(log_prior), mean_(std::move(mean)), var_(std::move(var)) {}

    std::vector<double> score(const Matrix& X) const override {
        std::vector<double> out(X.rows);
        for (std::size_t r = 0; r < X.rows; ++r) {
            double log_like[2];
            for (int c = 0; c < 2; ++c) {
                double ll = log_prior_[c];
                for (std::size_t j = 0; j < X.cols; ++j) {
                    const double v = var_.at(c, j);
                    const double d = X.at(r, j) - mean_.at(c, j);
                    ll += -0.5 * (std::log(2.0 * 3.141592653589793 * v) + d * d / v);
                }
                log_like[c] = ll;
            }
            const double m = std::max(log_like[0], log_like[1]);
            const double p0 = std::exp(log_like[0] - m);
            const double p1 = std::exp(log_like[1] - m);
            out[r] = p1 / (p0 + p1);
        }
        return out;
    }

private:
    std::array<double, 2> log_prior_;
    Matrix mean_; // 2 x features
    Matrix var_;
};

std::unique_ptr<Classifier> fit_gaussian_nb(const Matrix& X, std::span<const std::uint8_t> y,
                                            double var_smoothing) {
    std::array<std::size_t, 2> counts = {0, 0};
    for (auto v : y) ++counts[v];
    if (counts[0] == 0 || counts[1] == 0) {
        throw DataError("gaussian NB needs both classes in training data");
    }

    Matrix mean(2, X.cols, 0.0);
    Matrix var(2, X.cols, 0.0);
    for (std::size_t r = 0; r < X.rows; ++r) {
        for (std::size_t j = 0; j < X.cols; ++j) mean.at(y[r], j) += X.at(r, j);
    }
    for (int c = 0; c < 2; ++c) {
        for (std::size_t j = 0; j < X.cols; ++j) mean.at(c, j) /= counts[c];
    }
    double max_var = 0.0;
    for (std::size_t r = 0; r < X.rows; ++r) {
        for (std::size_t j = 0; j < X.cols; ++j) {
            const double d = X.at(r, j) - mean.at(y[r], j);
            var.at(y[r], j) += d * d;
        }
    }
    for (int c = 0; c < 2; ++c) {
        for (std::size_t j = 0; j < X.cols; ++j) {
            var.at(c, j) /= counts[c];
            max_var = std::max(max_var, var.at(c, j));
        }
    }
    // Smoothing keeps zero-variance features finite; scale by the largest
    // variance as is conventional, with an absolute floor for all-constant X.
    const double eps = std::max(var_smoothing * max_var, 1e-300);
    for (auto& v : var.data) v += eps;

    const double n = static_cast<double>(y.size());
    return std::make_unique<GaussianNbModel>(
        std::array<double, 2>{std::log(counts[0] / n), std::log(counts[1] / n)},
        std::move(mean), std::move(var));
}

class KnnModel final : public Classifier {
public:
    KnnModel(Matrix train, std::vector<std::uint8_t> labels, int k)
        : train_(std::move(train)), labels_(std::move(labels)), k_(k) {}

    std::vector<double> score(const Matrix& X) const override {
        std::vector<double> out(X.rows);
        std::vector<std::pair<double, std::size_t>> dist(train_.rows);
        for (std::size_t r = 0; r < X.rows; ++r) {
            const auto query = X.row(r);
            for (std::size_t t = 0; t < train_.rows; ++t) {
                const auto row = train_.row(t);
                double d2 = 0.0;
                for (std::size_t j = 0; j < query.size(); ++j) {
                    const double d = query[j] - row[j];
                    d2 += d * d;
                }
                dist[t] = {d2, t};
            }
            const std::size_t k = std::min<std::size_t>(k_, dist.size());
            // Ties resolve toward lower training row index.
            std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
            double pos = 0.0;
            for (std::size_t i = 0; i < k; ++i) pos += labels_[dist[i].second];
            out[r] = pos / static_cast<double>(k);
        }
        return out;
    }

private:
    Matrix train_;
    std::vector<std::uint8_t> labels_;
    int k_;
};

double get_param(const HyperParams& params, const std::string& key) {
    auto it = params.find(key);
    if (it == params.end()) throw DataError("missing hyperparameter: " + key);
    return it->second;
}

} // namespace

const std::vector<ModelKind>& all_model_kinds() {
    static const std::vector<ModelKind> kinds = {
        ModelKind::logistic_regression, ModelKind::decision_tree, ModelKind::random_forest,
        ModelKind::gaussian_naive_bayes, ModelKind::k_nearest_neighbors,
    };
    return kinds;
}

std::string to_string(ModelKind kind) {
    switch (kind) {
    case ModelKind::logistic_regression: return "logistic_regression";
    case ModelKind::decision_tree: return "decision_tree";
    case ModelKind::random_forest: return "random_forest";
    case ModelKind::gaussian_naive_bayes: return "gaussian_naive_bayes";
    case ModelKind::k_nearest_neighbors: return "k_nearest_neighbors";
    }
    return "unknown";
}

std::optional<ModelKind> model_from_string(const std::string& name) {
    for (auto kind : all_model_kinds()) {
        if (to_string(kind) == name) return kind;
    }
    return std::nullopt;
}

HyperParams draw_hyperparams(ModelKind kind, Rng& rng) {
    HyperParams p;
    switch (kind) {
    case ModelKind::logistic_regression:
        p["l2"] = rng.next_log_uniform(1e-4, 1e2);
        p["max_iters"] = static_cast<double>(rng.next_int(200, 2000));
        break;
    case ModelKind::decision_tree:
        p["max_depth"] = static_cast<double>(rng.next_int(2, 16));
        p["min_leaf"] = static_cast<double>(rng.next_int(1, 20));
        break;
    case ModelKind::random_forest:
        p["n_trees"] = static_cast<double>(rng.next_int(20, 200));
        p["max_depth"] = static_cast<double>(rng.next_int(2, 16));
        p["feature_fraction"] = rng.next_real(0.3, 1.0);
        break;
    case ModelKind::gaussian_naive_bayes:
        p["var_smoothing"] = rng.next_log_uniform(1e-12, 1e-6);
        break;
    case ModelKind::k_nearest_neighbors:
        p["k"] = static_cast<double>(1 + 2 * rng.next_int(0, 12)); // odd, 1..25
        break;
    }
    return p;
}

FittedModel fit_model(ModelKind kind, const Matrix& X, std::span<const std::uint8_t> y,
                      const HyperParams& params, std::uint64_t seed) {
    if (X.rows != y.size() || X.rows == 0) throw DataError("fit_model: bad training data");
    if (X.cols == 0) throw DataError("empty feature matrix");

    FittedModel model;
    model.kind = kind;
    model.hyperparameters = params;
    model.train_feature_count = X.cols;
    switch (kind) {
    case ModelKind::logistic_regression:
        model.impl = fit_logistic(X, y, get_param(params, "l2"),
                                  static_cast<int>(get_param(params, "max_iters")));
        break;
    case ModelKind::decision_tree: {
        TreeOptions options;
        options.max_depth = static_cast<int>(get_param(params, "max_depth"));
        options.min_leaf = static_cast<int>(get_param(params, "min_leaf"));
        model.impl = fit_decision_tree(X, y, options, mix64(seed, kFitSalt));
        break;
    }
    case ModelKind::random_forest: {
        TreeOptions options;
        options.max_depth = static_cast<int>(get_param(params, "max_depth"));
        options.feature_fraction = get_param(params, "feature_fraction");
        options.bootstrap = true;
        model.impl = fit_random_forest(X, y, static_cast<int>(get_param(params, "n_trees")),
                                       options, mix64(seed, kFitSalt));
        break;
    }
    case ModelKind::gaussian_naive_bayes:
        model.impl = fit_gaussian_nb(X, y, get_param(params, "var_smoothing"));
        break;
    case ModelKind::k_nearest_neighbors: {
        Matrix train = X;
        model.impl = std::make_shared<KnnModel>(
            std::move(train), std::vector<std::uint8_t>(y.begin(), y.end()),
            static_cast<int>(get_param(params, "k")));
        break;
    }
    }
    return model;
}

Prediction predict(const FittedModel& model, const Matrix& X) {
    if (X.cols != model.train_feature_count) {
        throw DataError("predict: feature count mismatch (" + std::to_string(X.cols) +
                        " vs " + std::to_string(model.train_feature_count) + " at training)");
    }
    Prediction pred;
    pred.scores = model.impl->score(X);
    pred.labels.resize(pred.scores.size());
    for (std::size_t i = 0; i < pred.scores.size(); ++i) {
        pred.labels[i] = pred.scores[i] >= 0.5 ? 1 : 0;
    }
    return pred;
}

std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const std::uint8_t> y,
                                                       int folds, std::uint64_t seed) {
    std::vector<std::vector<std::size_t>> out(folds);
    for (int cls = 0; cls < 2; ++cls) {
        std::vector<std::size_t> rows;
        for (std::size_t r = 0; r < y.size(); ++r) {
            if (y[r] == cls) rows.push_back(r);
        }
        Rng rng(mix64(seed, kFoldSalt, static_cast<std::uint64_t>(cls)));
        rng.shuffle(rows);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            out[i % folds].push_back(rows[i]);
        }
    }
    for (auto& fold : out) std::sort(fold.begin(), fold.end());
    return out;
}

std::pair<FittedModel, double> random_search_fit(ModelKind kind, const Matrix& X,
                                                 std::span<const std::uint8_t> y,
                                                 const CvConfig& cv) {
    if (cv.folds < 2) throw DataError("cross-validation needs at least 2 folds");
    if (cv.budget < 1) throw DataError("random search budget must be >= 1");
    std::size_t minority = std::min<std::size_t>(
        std::count(y.begin(), y.end(), std::uint8_t{1}),
        std::count(y.begin(), y.end(), std::uint8_t{0}));
    if (static_cast<std::size_t>(cv.folds) > minority) {
        throw DataError("too few minority rows (" + std::to_string(minority) +
                        ") for " + std::to_string(cv.folds) + " stratified folds");
    }

    const auto folds = stratified_kfold(y, cv.folds, cv.seed);

    Rng draw_rng(mix64(cv.seed, kDrawSalt));
    std::vector<HyperParams> draws(cv.budget);
    for (auto& d : draws) d = draw_hyperparams(kind, draw_rng);

    double best_score = -std::numeric_limits<double>::infinity();
    std::size_t best_draw = 0;
    for (std::size_t b = 0; b < draws.size(); ++b) {
        double fold_sum = 0.0;
        for (std::size_t f = 0; f < folds.size(); ++f) {
            std::vector<bool> in_val(y.size(), false);
            for (std::size_t r : folds[f]) in_val[r] = true;

            Matrix train_X(y.size() - folds[f].size(), X.cols);
            std::vector<std::uint8_t> train_y;
            train_y.reserve(train_X.rows);
            Matrix val_X(folds[f].size(), X.cols);
            std::vector<std::uint8_t> val_y;
            val_y.reserve(folds[f].size());
            std::size_t ti = 0, vi = 0;
            for (std::size_t r = 0; r < y.size(); ++r) {
                const auto src = X.row(r);
                if (in_val[r]) {
                    std::copy(src.begin(), src.end(), val_X.row(vi++).begin());
                    val_y.push_back(y[r]);
                } else {
                    std::copy(src.begin(), src.end(), train_X.row(ti++).begin());
                    train_y.push_back(y[r]);
                }
            }

            const auto model =
                fit_model(kind, train_X, train_y, draws[b], mix64(cv.seed, b, f));
            const auto pred = predict(model, val_X);
            double metric_sum = 0.0;
            for (auto metric : cv.scoring) {
                metric_sum += evaluate(metric, val_y, pred.labels, pred.scores);
            }
            fold_sum += metric_sum / static_cast<double>(cv.scoring.size());
        }
        const double score = fold_sum / static_cast<double>(folds.size());
        if (score > best_score) {
            best_score = score;
            best_draw = b;
        }
    }

    auto final_model = fit_model(kind, X, y, draws[best_draw], mix64(cv.seed, kRefitSalt));
    return {std::move(final_model), best_score};
}

} // namespace autopipe
