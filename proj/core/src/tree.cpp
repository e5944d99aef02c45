#include "autopipe/common.hpp"
#include "autopipe/models.hpp"
#include "autopipe/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace autopipe {

namespace {

struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double score = 0.0; // leaf positive fraction
};

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double impurity = 0.0; // weighted child gini
};

double gini(double pos, double total) {
    if (total == 0.0) return 0.0;
    const double p = pos / total;
    return 2.0 * p * (1.0 - p);
}

class TreeBuilder {
public:
    TreeBuilder(const Matrix& X, std::span<const std::uint8_t> y, const TreeOptions& options,
                Rng* feature_rng)
        : X_(X), y_(y), options_(options), feature_rng_(feature_rng) {
        n_split_features_ = static_cast<std::size_t>(
            std::ceil(options.feature_fraction * static_cast<double>(X.cols)));
        n_split_features_ = std::clamp<std::size_t>(n_split_features_, 1, X.cols);
    }

    std::vector<TreeNode> build(std::vector<std::size_t> rows) {
        nodes_.clear();
        grow(std::move(rows), 0);
        return std::move(nodes_);
    }

private:
    int grow(std::vector<std::size_t> rows, int depth) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();

        double pos = 0.0;
        for (std::size_t r : rows) pos += y_[r];
        nodes_[id].score = pos / static_cast<double>(rows.size());

        const bool pure = pos == 0.0 || pos == static_cast<double>(rows.size());
        const bool depth_stop = options_.max_depth >= 0 && depth >= options_.max_depth;
        if (pure || depth_stop ||
            rows.size() < 2 * static_cast<std::size_t>(options_.min_leaf)) {
            return id;
        }

        const SplitChoice split = best_split(rows, pos);
        if (!split.found) return id;

        std::vector<std::size_t> left_rows, right_rows;
        for (std::size_t r : rows) {
            (X_.at(r, split.feature) <= split.threshold ? left_rows : right_rows).push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();

        nodes_[id].feature = split.feature;
        nodes_[id].threshold = split.threshold;
        const int left = grow(std::move(left_rows), depth + 1);
        const int right = grow(std::move(right_rows), depth + 1);
        nodes_[id].left = left;
        nodes_[id].right = right;
        return id;
    }

    std::vector<std::size_t> candidate_features() {
        std::vector<std::size_t> features(X_.cols);
        std::iota(features.begin(), features.end(), 0u);
        if (feature_rng_ && n_split_features_ < X_.cols) {
            // Partial Fisher-Yates: first n_split_features_ entries are the
            // sampled subset; sort retains deterministic scan order.
            for (std::size_t i = 0; i < n_split_features_; ++i) {
                const std::size_t j = i + feature_rng_->next_below(features.size() - i);
                std::swap(features[i], features[j]);
            }
            features.resize(n_split_features_);
            std::sort(features.begin(), features.end());
        }
        return features;
    }

    SplitChoice best_split(const std::vector<std::size_t>& rows, double total_pos) {
        SplitChoice best;
        const std::size_t min_leaf = static_cast<std::size_t>(options_.min_leaf);

        std::vector<std::pair<double, std::uint8_t>> values(rows.size());
        for (std::size_t f : candidate_features()) {
            for (std::size_t i = 0; i < rows.size(); ++i) {
                values[i] = {X_.at(rows[i], f), y_[rows[i]]};
            }
            std::sort(values.begin(), values.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });

            double left_pos = 0.0;
            for (std::size_t i = 0; i + 1 < values.size(); ++i) {
                left_pos += values[i].second;
                if (values[i].first == values[i + 1].first) continue;
                const std::size_t n_left = i + 1;
                const std::size_t n_right = values.size() - n_left;
                if (n_left < min_leaf || n_right < min_leaf) continue;

                const double impurity =
                    gini(left_pos, static_cast<double>(n_left)) * static_cast<double>(n_left) +
                    gini(total_pos - left_pos, static_cast<double>(n_right)) *
                        static_cast<double>(n_right);
                if (!best.found || impurity < best.impurity - 1e-12) {
                    best.found = true;
                    best.feature = static_cast<int>(f);
                    best.threshold = 0.5 * (values[i].first + values[i + 1].first);
                    best.impurity = impurity;
                }
            }
        }
        // Zero-gain splits are kept: children are strictly smaller, so the
        // recursion still terminates, and non-linear patterns (XOR-like)
        // only become separable after such a split.
        return best;
    }

    const Matrix& X_;
    std::span<const std::uint8_t> y_;
    const TreeOptions& options_;
    Rng* feature_rng_;
    std::size_t n_split_features_;
    std::vector<TreeNode> nodes_;
};

double tree_score_row(const std::vector<TreeNode>& nodes, std::span<const double> row) {
    int id = 0;
    while (nodes[id].feature >= 0) {
        id = row[nodes[id].feature] <= nodes[id].threshold ? nodes[id].left : nodes[id].right;
    }
    return nodes[id].score;
}

class DecisionTreeModel final : public Classifier {
public:
    explicit DecisionTreeModel(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

    std::vector<double> score(const Matrix& X) const override {
        std::vector<double> out(X.rows);
        for (std::size_t r = 0; r < X.rows; ++r) out[r] = tree_score_row(nodes_, X.row(r));
        return out;
    }

private:
    std::vector<TreeNode> nodes_;
};

class RandomForestModel final : public Classifier {
public:
    explicit RandomForestModel(std::vector<std::vector<TreeNode>> trees)
        : trees_(std::move(trees)) {}

    std::vector<double> score(const Matrix& X) const override {
        std::vector<double> out(X.rows, 0.0);
        for (const auto& tree : trees_) {
            for (std::size_t r = 0; r < X.rows; ++r) out[r] += tree_score_row(tree, X.row(r));
        }
        const double inv = 1.0 / static_cast<double>(trees_.size());
        for (double& v : out) v *= inv;
        return out;
    }

private:
    std::vector<std::vector<TreeNode>> trees_;
};

std::vector<std::size_t> all_rows(std::size_t n) {
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0u);
    return rows;
}

} // namespace

std::unique_ptr<Classifier> fit_decision_tree(const Matrix& X, std::span<const std::uint8_t> y,
                                              const TreeOptions& options, std::uint64_t seed) {
    if (X.rows == 0 || X.rows != y.size()) throw DataError("decision tree: bad training data");
    Rng rng(seed);
    Rng* feature_rng = options.feature_fraction < 1.0 ? &rng : nullptr;
    TreeBuilder builder(X, y, options, feature_rng);

    std::vector<std::size_t> rows;
    if (options.bootstrap) {
        rows.resize(X.rows);
        for (auto& r : rows) r = rng.next_below(X.rows);
        std::sort(rows.begin(), rows.end());
    } else {
        rows = all_rows(X.rows);
    }
    return std::make_unique<DecisionTreeModel>(builder.build(std::move(rows)));
}

std::unique_ptr<Classifier> fit_random_forest(const Matrix& X, std::span<const std::uint8_t> y,
                                              int n_trees, const TreeOptions& options,
                                              std::uint64_t seed) {
    if (n_trees < 1) throw DataError("random forest needs at least one tree");
    std::vector<std::vector<TreeNode>> trees;
    trees.reserve(n_trees);
    for (int t = 0; t < n_trees; ++t) {
        Rng rng(mix64(seed, static_cast<std::uint64_t>(t)));
        Rng* feature_rng = options.feature_fraction < 1.0 ? &rng : nullptr;
        TreeBuilder builder(X, y, options, feature_rng);
        std::vector<std::size_t> rows;
        if (options.bootstrap) {
            rows.resize(X.rows);
            for (auto& r : rows) r = rng.next_below(X.rows);
            std::sort(rows.begin(), rows.end());
        } else {
            rows = all_rows(X.rows);
        }
        trees.push_back(builder.build(std::move(rows)));
    }
    return std::make_unique<RandomForestModel>(std::move(trees));
}

} // namespace autopipe
