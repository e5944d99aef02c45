#pragma once

#include "autopipe/csv.hpp"

#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace autopipe {

enum class ColumnKind { numeric, categorical };

struct ColumnSchema {
    std::string name;
    ColumnKind kind = ColumnKind::numeric;
    /// Distinct category codes in first-seen order; categorical only.
    std::vector<std::string> categories;

    bool operator==(const ColumnSchema&) const = default;
};

/// Missing cells are stored as NaN. Categorical cells store the index into
/// the column's category list as an exact small integer.
inline bool cell_missing(double v) { return std::isnan(v); }
inline double missing_cell() { return std::nan(""); }

/// Column-typed feature matrix with binary labels. Immutable after
/// construction; safe to share across threads without synchronization.
///
/// An optional access probe counts row reads; tests attach it to the held-out
/// partition to prove nothing touches it before the final retrain.
class TabularDataset {
public:
    TabularDataset() = default;
    TabularDataset(std::vector<ColumnSchema> schema, std::vector<double> cells,
                   std::vector<std::uint8_t> labels, std::vector<std::int64_t> row_ids,
                   std::string negative_label, std::string positive_label);

    std::size_t n_rows() const { return labels_.size(); }
    std::size_t n_cols() const { return schema_.size(); }

    const std::vector<ColumnSchema>& schema() const { return schema_; }
    const ColumnSchema& column(std::size_t c) const { return schema_[c]; }

    double cell(std::size_t r, std::size_t c) const {
        touch();
        return cells_[r * schema_.size() + c];
    }
    bool missing(std::size_t r, std::size_t c) const { return cell_missing(cell(r, c)); }

    int label(std::size_t r) const {
        touch();
        return labels_[r];
    }
    const std::vector<std::uint8_t>& labels() const {
        touch();
        return labels_;
    }
    const std::vector<std::int64_t>& row_ids() const { return row_ids_; }

    std::size_t positive_count() const { return positives_; }
    std::size_t negative_count() const { return labels_.size() - positives_; }
    /// positive/negative count ratio; +inf when there are no negatives.
    double class_ratio() const;

    std::size_t missing_count(std::size_t c) const { return missing_per_col_[c]; }
    std::size_t missing_total() const;

    const std::string& negative_label() const { return negative_label_; }
    const std::string& positive_label() const { return positive_label_; }

    /// New dataset holding the given rows (indices into this dataset, kept
    /// in the given order). Schema and label mapping are shared.
    TabularDataset take_rows(const std::vector<std::size_t>& indices) const;

    /// Human-readable description: rows, columns, per-column missing counts,
    /// class balance.
    std::string summary() const;

    void set_access_probe(std::shared_ptr<std::atomic<std::uint64_t>> probe) {
        access_probe_ = std::move(probe);
    }

private:
    void touch() const {
        if (access_probe_) access_probe_->fetch_add(1, std::memory_order_relaxed);
    }

    std::vector<ColumnSchema> schema_;
    std::vector<double> cells_; // row-major, n_rows x n_cols
    std::vector<std::uint8_t> labels_;
    std::vector<std::int64_t> row_ids_;
    std::vector<std::size_t> missing_per_col_;
    std::size_t positives_ = 0;
    std::string negative_label_;
    std::string positive_label_;
    std::shared_ptr<std::atomic<std::uint64_t>> access_probe_;
};

struct LoadOptions {
    std::string label_column;
    std::vector<std::string> missing_tokens = {"", "NA", "NaN", "null"};
    std::map<std::string, ColumnKind> type_hints;
    /// When unset, the minority class becomes the positive class.
    std::optional<std::string> positive_label;
    /// Rows whose label cell is missing abort the load unless set.
    bool drop_missing_labels = false;
};

TabularDataset load_csv(const std::string& path, const LoadOptions& options);
TabularDataset dataset_from_csv(const CsvTable&, const LoadOptions&, const std::string& origin);

/// Inverse of load_csv for round-trip checks and exports; the label column is
/// appended last with the original label strings.
void write_csv(const TabularDataset& ds, const std::string& path, const std::string& label_column);

struct SplitPair {
    TabularDataset train;
    TabularDataset test;
};

/// Stratified train/test partition: per-class shuffle by seed, per-class
/// largest-remainder allocation with ties toward the minority class.
SplitPair stratified_split(const TabularDataset& ds, double test_fraction, std::uint64_t seed);

/// Stratified row sampling without replacement; fraction of each class kept,
/// largest-remainder rounding.
TabularDataset subsample(const TabularDataset& ds, double fraction, std::uint64_t seed);

} // namespace autopipe
