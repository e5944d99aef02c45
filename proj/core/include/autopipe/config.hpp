#pragma once

#include "autopipe/dataset.hpp"
#include "autopipe/search.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace autopipe {

struct DatasetConfig {
    std::string path;
    std::string label_column;
    std::vector<std::string> missing_tokens = {"", "NA", "NaN", "null"};
    std::optional<std::string> positive_label;
    bool drop_missing_labels = false;
    std::map<std::string, ColumnKind> type_hints;

    LoadOptions load_options() const;
};

struct OutputConfig {
    std::string dir = "out";
    int runs = 1;
    int verbosity = 1;
};

struct RunConfig {
    DatasetConfig dataset;
    SearchConfig search;
    OutputConfig output;
};

/// Parse a JSON config document; every unset key takes its default, unknown
/// keys and unknown method/model/metric names are errors that list the valid
/// alternatives.
RunConfig parse_config_text(const std::string& json_text, const std::string& origin);

/// Read the optional config file, apply dotted-path overrides
/// (e.g. "search.seed" = "7"), then parse. Override values are parsed as
/// JSON when possible and fall back to plain strings.
RunConfig load_config(const std::optional<std::string>& config_path,
                      const std::vector<std::pair<std::string, std::string>>& overrides);

/// The fully resolved configuration with every default echoed. The output is
/// itself a valid config file that reproduces the run exactly.
std::string resolved_config_json(const RunConfig& config);

} // namespace autopipe
