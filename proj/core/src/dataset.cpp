#include "autopipe/dataset.hpp"

#include "autopipe/common.hpp"
#include "autopipe/csv.hpp"
#include "autopipe/rng.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

namespace autopipe {

namespace {

bool parse_number(const std::string& text, double& out) {
    const char* begin = text.data();
    const char* end = begin + text.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end > begin && (end[-1] == ' ' || end[-1] == '\t')) --end;
    if (begin == end) return false;
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

std::string format_number(double v) {
    // Categorical codes and most clinical values are small; keep integers
    // clean and everything else round-trippable.
    if (v == static_cast<std::int64_t>(v) && std::abs(v) < 1e15) {
        return std::to_string(static_cast<std::int64_t>(v));
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Largest-remainder allocation of round(fraction * total) slots across
/// classes, ties broken toward the minority class.
std::vector<std::size_t> largest_remainder_take(const std::vector<std::size_t>& class_counts,
                                                double fraction) {
    const std::size_t n_classes = class_counts.size();
    std::size_t total = 0;
    for (auto c : class_counts) total += c;

    std::vector<std::size_t> take(n_classes);
    std::vector<double> remainder(n_classes);
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < n_classes; ++c) {
        const double quota = static_cast<double>(class_counts[c]) * fraction;
        take[c] = static_cast<std::size_t>(quota);
        remainder[c] = quota - static_cast<double>(take[c]);
        assigned += take[c];
    }
    const auto target = static_cast<std::size_t>(
        std::llround(static_cast<double>(total) * fraction));

    std::vector<std::size_t> order(n_classes);
    for (std::size_t c = 0; c < n_classes; ++c) order[c] = c;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
        return class_counts[a] < class_counts[b]; // tie: minority first
    });
    for (std::size_t i = 0; i < order.size() && assigned < target; ++i) {
        ++take[order[i]];
        ++assigned;
    }
    return take;
}

std::array<std::vector<std::size_t>, 2> rows_by_class(const TabularDataset& ds) {
    std::array<std::vector<std::size_t>, 2> out;
    for (std::size_t r = 0; r < ds.n_rows(); ++r) out[ds.label(r)].push_back(r);
    return out;
}

constexpr std::uint64_t kSplitSalt = 0x73706c6974ULL;
constexpr std::uint64_t kSubsampleSalt = 0x737562ULL;

} // namespace

TabularDataset::TabularDataset(std::vector<ColumnSchema> schema, std::vector<double> cells,
                               std::vector<std::uint8_t> labels,
                               std::vector<std::int64_t> row_ids,
                               std::string negative_label, std::string positive_label)
    : schema_(std::move(schema)),
      cells_(std::move(cells)),
      labels_(std::move(labels)),
      row_ids_(std::move(row_ids)),
      negative_label_(std::move(negative_label)),
      positive_label_(std::move(positive_label)) {
    if (cells_.size() != labels_.size() * schema_.size()) {
        throw DataError("cell count does not match rows x columns");
    }
    if (row_ids_.size() != labels_.size()) {
        throw DataError("row_ids length does not match labels length");
    }
    std::set<std::string> names;
    for (const auto& col : schema_) {
        if (!names.insert(col.name).second) {
            throw DataError("duplicate column name: " + col.name);
        }
        if (col.kind == ColumnKind::categorical) {
            if (col.categories.empty()) {
                throw DataError("categorical column with no categories: " + col.name);
            }
            std::set<std::string> codes(col.categories.begin(), col.categories.end());
            if (codes.size() != col.categories.size()) {
                throw DataError("duplicate category codes in column: " + col.name);
            }
        }
    }
    missing_per_col_.assign(schema_.size(), 0);
    for (std::size_t r = 0; r < labels_.size(); ++r) {
        positives_ += labels_[r];
        for (std::size_t c = 0; c < schema_.size(); ++c) {
            const double v = cells_[r * schema_.size() + c];
            if (cell_missing(v)) {
                ++missing_per_col_[c];
            } else if (schema_[c].kind == ColumnKind::categorical) {
                const auto code = static_cast<std::int64_t>(v);
                if (v != static_cast<double>(code) || code < 0 ||
                    code >= static_cast<std::int64_t>(schema_[c].categories.size())) {
                    throw DataError("categorical cell out of range in column: " + schema_[c].name);
                }
            }
        }
    }
}

double TabularDataset::class_ratio() const {
    const std::size_t neg = negative_count();
    if (neg == 0) return std::numeric_limits<double>::infinity();
    return static_cast<double>(positives_) / static_cast<double>(neg);
}

std::size_t TabularDataset::missing_total() const {
    std::size_t total = 0;
    for (auto m : missing_per_col_) total += m;
    return total;
}

TabularDataset TabularDataset::take_rows(const std::vector<std::size_t>& indices) const {
    std::vector<double> cells;
    cells.reserve(indices.size() * schema_.size());
    std::vector<std::uint8_t> labels;
    labels.reserve(indices.size());
    std::vector<std::int64_t> ids;
    ids.reserve(indices.size());
    for (std::size_t r : indices) {
        touch();
        const double* row = cells_.data() + r * schema_.size();
        cells.insert(cells.end(), row, row + schema_.size());
        labels.push_back(labels_[r]);
        ids.push_back(row_ids_[r]);
    }
    return TabularDataset(schema_, std::move(cells), std::move(labels), std::move(ids),
                          negative_label_, positive_label_);
}

std::string TabularDataset::summary() const {
    std::ostringstream os;
    os << n_rows() << " rows x " << n_cols() << " columns, "
       << positive_count() << " positive / " << negative_count() << " negative";
    char ratio[32];
    std::snprintf(ratio, sizeof(ratio), "%.4f", class_ratio());
    os << " (ratio " << ratio << ")\n";
    os << "labels: positive=" << positive_label_ << " negative=" << negative_label_ << "\n";
    for (std::size_t c = 0; c < schema_.size(); ++c) {
        os << "  " << schema_[c].name << ": "
           << (schema_[c].kind == ColumnKind::numeric ? "numeric" : "categorical");
        if (schema_[c].kind == ColumnKind::categorical) {
            os << " (" << schema_[c].categories.size() << " categories)";
        }
        if (missing_per_col_[c] > 0) os << ", missing " << missing_per_col_[c];
        os << "\n";
    }
    return os.str();
}

TabularDataset dataset_from_csv(const CsvTable& table, const LoadOptions& options,
                                const std::string& origin) {
    const auto& header = table.header;
    std::size_t label_col = header.size();
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == options.label_column) {
            label_col = c;
            break;
        }
    }
    if (label_col == header.size()) {
        throw DataError(origin + ": label column not found: " + options.label_column);
    }

    const std::set<std::string> missing_tokens(options.missing_tokens.begin(),
                                               options.missing_tokens.end());
    auto is_missing = [&](const std::string& cell) { return missing_tokens.count(cell) > 0; };

    // Pass 1: drop or reject rows with a missing label, collect label values.
    std::vector<std::size_t> kept;
    std::size_t rejected = 0;
    std::vector<std::string> label_values; // distinct, first-seen order
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const std::string& cell = table.rows[r][label_col];
        if (is_missing(cell)) {
            ++rejected;
            continue;
        }
        kept.push_back(r);
        if (std::find(label_values.begin(), label_values.end(), cell) == label_values.end()) {
            label_values.push_back(cell);
            if (label_values.size() > 2) {
                throw DataError(origin + ": more than two label values in column " +
                                options.label_column);
            }
        }
    }
    if (rejected > 0 && !options.drop_missing_labels) {
        throw DataError(origin + ": " + std::to_string(rejected) +
                        " rows have a missing label; aborting (set drop_missing_labels to drop)");
    }
    if (label_values.size() != 2) {
        throw DataError(origin + ": label column must contain exactly two distinct values, found " +
                        std::to_string(label_values.size()));
    }

    std::size_t count0 = 0;
    for (std::size_t r : kept) count0 += table.rows[r][label_col] == label_values[0];
    const std::size_t count1 = kept.size() - count0;

    std::string positive, negative;
    if (options.positive_label) {
        positive = *options.positive_label;
        if (positive != label_values[0] && positive != label_values[1]) {
            throw DataError(origin + ": positive_label '" + positive +
                            "' does not appear in the label column");
        }
        negative = positive == label_values[0] ? label_values[1] : label_values[0];
    } else {
        // Minority class is positive; ties keep first-seen order as negative.
        const bool first_is_minority = count0 < count1;
        positive = first_is_minority ? label_values[0] : label_values[1];
        negative = first_is_minority ? label_values[1] : label_values[0];
    }

    // Pass 2: infer column kinds.
    std::vector<ColumnSchema> schema;
    std::vector<std::size_t> feature_cols;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c == label_col) continue;
        feature_cols.push_back(c);
        ColumnSchema col;
        col.name = header[c];
        auto hint = options.type_hints.find(col.name);
        if (hint != options.type_hints.end()) {
            col.kind = hint->second;
        } else {
            col.kind = ColumnKind::numeric;
            for (std::size_t r : kept) {
                const std::string& cell = table.rows[r][c];
                double ignored;
                if (!is_missing(cell) && !parse_number(cell, ignored)) {
                    col.kind = ColumnKind::categorical;
                    break;
                }
            }
        }
        schema.push_back(std::move(col));
    }

    // Pass 3: materialize cells, building category lists in first-seen order.
    std::vector<std::map<std::string, std::size_t>> code_of(schema.size());
    std::vector<double> cells;
    cells.reserve(kept.size() * schema.size());
    std::vector<std::uint8_t> labels;
    labels.reserve(kept.size());
    std::vector<std::int64_t> row_ids;
    row_ids.reserve(kept.size());

    for (std::size_t r : kept) {
        for (std::size_t j = 0; j < feature_cols.size(); ++j) {
            const std::string& cell = table.rows[r][feature_cols[j]];
            if (is_missing(cell)) {
                cells.push_back(missing_cell());
                continue;
            }
            if (schema[j].kind == ColumnKind::numeric) {
                double v;
                if (!parse_number(cell, v)) {
                    throw DataError(origin + ": non-numeric value '" + cell +
                                    "' in numeric column " + schema[j].name);
                }
                cells.push_back(v);
            } else {
                auto [it, inserted] = code_of[j].try_emplace(cell, schema[j].categories.size());
                if (inserted) schema[j].categories.push_back(cell);
                cells.push_back(static_cast<double>(it->second));
            }
        }
        labels.push_back(table.rows[r][label_col] == positive ? 1 : 0);
        row_ids.push_back(static_cast<std::int64_t>(r));
    }

    return TabularDataset(std::move(schema), std::move(cells), std::move(labels),
                          std::move(row_ids), negative, positive);
}

TabularDataset load_csv(const std::string& path, const LoadOptions& options) {
    return dataset_from_csv(read_csv_file(path), options, path);
}

void write_csv(const TabularDataset& ds, const std::string& path,
               const std::string& label_column) {
    CsvTable table;
    for (const auto& col : ds.schema()) table.header.push_back(col.name);
    table.header.push_back(label_column);
    table.rows.reserve(ds.n_rows());
    for (std::size_t r = 0; r < ds.n_rows(); ++r) {
        std::vector<std::string> row;
        row.reserve(ds.n_cols() + 1);
        for (std::size_t c = 0; c < ds.n_cols(); ++c) {
            const double v = ds.cell(r, c);
            if (cell_missing(v)) {
                row.emplace_back("NA");
            } else if (ds.column(c).kind == ColumnKind::categorical) {
                row.push_back(ds.column(c).categories[static_cast<std::size_t>(v)]);
            } else {
                row.push_back(format_number(v));
            }
        }
        row.push_back(ds.label(r) ? ds.positive_label() : ds.negative_label());
        table.rows.push_back(std::move(row));
    }
    write_csv_file(path, table);
}

SplitPair stratified_split(const TabularDataset& ds, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw DataError("test_fraction must be in (0,1)");
    }
    auto by_class = rows_by_class(ds);
    for (int c = 0; c < 2; ++c) {
        if (by_class[c].size() < 2) {
            throw DataError("stratified_split requires at least 2 rows per class, class " +
                            std::to_string(c) + " has " + std::to_string(by_class[c].size()));
        }
    }
    const std::vector<std::size_t> counts = {by_class[0].size(), by_class[1].size()};
    const auto take = largest_remainder_take(counts, test_fraction);

    std::vector<std::size_t> test_rows, train_rows;
    for (int c = 0; c < 2; ++c) {
        Rng rng(mix64(seed, kSplitSalt + static_cast<std::uint64_t>(c)));
        auto rows = by_class[c];
        rng.shuffle(rows);
        test_rows.insert(test_rows.end(), rows.begin(), rows.begin() + take[c]);
        train_rows.insert(train_rows.end(), rows.begin() + take[c], rows.end());
    }
    std::sort(test_rows.begin(), test_rows.end());
    std::sort(train_rows.begin(), train_rows.end());
    return SplitPair{ds.take_rows(train_rows), ds.take_rows(test_rows)};
}

TabularDataset subsample(const TabularDataset& ds, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw DataError("subsample fraction must be in (0,1]");
    }
    auto by_class = rows_by_class(ds);
    const std::vector<std::size_t> counts = {by_class[0].size(), by_class[1].size()};
    const auto take = largest_remainder_take(counts, fraction);
    for (int c = 0; c < 2; ++c) {
        if (counts[c] > 0 && take[c] == 0) {
            throw DataError("subsample fraction would empty class " + std::to_string(c));
        }
    }
    std::vector<std::size_t> keep;
    for (int c = 0; c < 2; ++c) {
        Rng rng(mix64(seed, kSubsampleSalt + static_cast<std::uint64_t>(c)));
        auto rows = by_class[c];
        rng.shuffle(rows);
        keep.insert(keep.end(), rows.begin(), rows.begin() + take[c]);
    }
    std::sort(keep.begin(), keep.end());
    return ds.take_rows(keep);
}

} // namespace autopipe
