#include "autopipe/config.hpp"

#include "autopipe/common.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace autopipe {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& origin, const std::string& msg) {
    throw ConfigError(origin + ": " + msg);
}

std::string joined(const std::vector<std::string>& names) {
    std::string out;
    for (const auto& n : names) {
        if (!out.empty()) out += ", ";
        out += n;
    }
    return out;
}

void check_keys(const std::string& origin, const json& obj, const std::string& where,
                const std::vector<std::string>& allowed) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            fail(origin, "unknown key '" + where + key + "'; valid: " + joined(allowed));
        }
    }
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return fallback;
    return it->get<T>();
}

std::vector<MetricKind> parse_metric_list(const std::string& origin, const json& arr,
                                          const std::string& where) {
    std::vector<MetricKind> out;
    for (const auto& entry : arr) {
        const auto name = entry.get<std::string>();
        const auto kind = metric_from_string(name);
        if (!kind) {
            std::vector<std::string> valid;
            for (auto k : all_metric_kinds()) valid.push_back(to_string(k));
            fail(origin, "unknown metric '" + name + "' in " + where +
                             "; valid: " + joined(valid));
        }
        out.push_back(*kind);
    }
    return out;
}

MethodDescriptor parse_method(const std::string& origin, const json& entry, int stage) {
    MethodDescriptor method;
    if (entry.is_string()) {
        method.name = entry.get<std::string>();
    } else if (entry.is_object()) {
        check_keys(origin, entry, std::string("catalog.") + stage_name(stage) + ".",
                   {"name", "params"});
        method.name = get_or<std::string>(entry, "name", "");
        if (entry.contains("params")) {
            for (const auto& [key, value] : entry["params"].items()) {
                method.params[key] = value.get<double>();
            }
        }
    } else {
        fail(origin, std::string("catalog.") + stage_name(stage) +
                         " entries must be strings or {name, params} objects");
    }
    return method;
}

CatalogConfig parse_catalog(const std::string& origin, const json& section) {
    CatalogConfig config;
    std::vector<std::string> stage_names;
    for (int s = 0; s < kNumStages; ++s) stage_names.push_back(stage_name(s));
    check_keys(origin, section, "catalog.", stage_names);
    for (int s = 0; s < kNumStages; ++s) {
        auto it = section.find(stage_name(s));
        if (it == section.end()) continue;
        std::vector<MethodDescriptor> methods;
        for (const auto& entry : *it) methods.push_back(parse_method(origin, entry, s));
        config.stages[s] = std::move(methods);
    }
    return config;
}

json default_doc() {
    // One source of defaults: serialize a default RunConfig.
    return json::object();
}

void apply_dotted_override(json& doc, const std::string& path, const std::string& value) {
    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos
                                                       ? std::string::npos
                                                       : dot - start);
        if (key.empty()) throw ConfigError("bad override path: " + path);
        if (dot == std::string::npos) {
            json parsed = json::parse(value, nullptr, false);
            (*node)[key] = parsed.is_discarded() ? json(value) : parsed;
            return;
        }
        node = &(*node)[key];
        if (!node->is_object()) *node = json::object();
        start = dot + 1;
    }
}

} // namespace

LoadOptions DatasetConfig::load_options() const {
    LoadOptions options;
    options.label_column = label_column;
    options.missing_tokens = missing_tokens;
    options.type_hints = type_hints;
    options.positive_label = positive_label;
    options.drop_missing_labels = drop_missing_labels;
    return options;
}

RunConfig parse_config_text(const std::string& json_text, const std::string& origin) {
    json doc = json::parse(json_text, nullptr, false);
    if (doc.is_discarded()) fail(origin, "not valid JSON");
    if (!doc.is_object()) fail(origin, "config root must be an object");
    check_keys(origin, doc, "", {"dataset", "search", "catalog", "output"});

    RunConfig config;

    if (doc.contains("dataset")) {
        const json& section = doc["dataset"];
        check_keys(origin, section, "dataset.",
                   {"path", "label_column", "missing_tokens", "positive_label",
                    "drop_missing_labels", "type_hints"});
        config.dataset.path = get_or<std::string>(section, "path", "");
        config.dataset.label_column = get_or<std::string>(section, "label_column", "");
        if (section.contains("missing_tokens")) {
            config.dataset.missing_tokens =
                section["missing_tokens"].get<std::vector<std::string>>();
        }
        if (section.contains("positive_label") && !section["positive_label"].is_null()) {
            config.dataset.positive_label = section["positive_label"].get<std::string>();
        }
        config.dataset.drop_missing_labels =
            get_or<bool>(section, "drop_missing_labels", false);
        if (section.contains("type_hints")) {
            for (const auto& [column, kind] : section["type_hints"].items()) {
                const auto name = kind.get<std::string>();
                if (name == "numeric") {
                    config.dataset.type_hints[column] = ColumnKind::numeric;
                } else if (name == "categorical") {
                    config.dataset.type_hints[column] = ColumnKind::categorical;
                } else {
                    fail(origin, "type hint for '" + column +
                                     "' must be numeric or categorical, got '" + name + "'");
                }
            }
        }
    }

    if (doc.contains("search")) {
        const json& section = doc["search"];
        check_keys(origin, section, "search.",
                   {"seed", "n_samples", "m", "refinement_budget", "cv", "models", "metrics",
                    "target_metrics", "test_fraction", "subsample_fraction",
                    "validation_fraction", "workers"});
        config.search.seed = get_or<std::uint64_t>(section, "seed", config.search.seed);
        config.search.n_samples =
            get_or<std::size_t>(section, "n_samples", config.search.n_samples);
        config.search.top_m = get_or<int>(section, "m", config.search.top_m);
        config.search.refinement_budget =
            get_or<std::size_t>(section, "refinement_budget", config.search.refinement_budget);
        if (section.contains("cv")) {
            check_keys(origin, section["cv"], "search.cv.", {"folds", "budget"});
            config.search.cv_folds = get_or<int>(section["cv"], "folds", config.search.cv_folds);
            config.search.cv_budget =
                get_or<int>(section["cv"], "budget", config.search.cv_budget);
        }
        if (section.contains("models")) {
            config.search.models.clear();
            for (const auto& entry : section["models"]) {
                const auto name = entry.get<std::string>();
                const auto kind = model_from_string(name);
                if (!kind) {
                    std::vector<std::string> valid;
                    for (auto k : all_model_kinds()) valid.push_back(to_string(k));
                    fail(origin, "unknown model '" + name + "'; valid: " + joined(valid));
                }
                config.search.models.push_back(*kind);
            }
        }
        if (section.contains("metrics")) {
            config.search.metrics = parse_metric_list(origin, section["metrics"], "metrics");
        }
        if (section.contains("target_metrics")) {
            config.search.target_metrics =
                parse_metric_list(origin, section["target_metrics"], "target_metrics");
        }
        config.search.test_fraction =
            get_or<double>(section, "test_fraction", config.search.test_fraction);
        config.search.subsample_fraction =
            get_or<double>(section, "subsample_fraction", config.search.subsample_fraction);
        config.search.validation_fraction =
            get_or<double>(section, "validation_fraction", config.search.validation_fraction);
        config.search.workers = get_or<int>(section, "workers", config.search.workers);
    }

    if (doc.contains("catalog")) {
        config.search.catalog = make_catalog(parse_catalog(origin, doc["catalog"]));
    }

    if (doc.contains("output")) {
        const json& section = doc["output"];
        check_keys(origin, section, "output.", {"dir", "runs", "verbosity"});
        config.output.dir = get_or<std::string>(section, "dir", config.output.dir);
        config.output.runs = get_or<int>(section, "runs", config.output.runs);
        config.output.verbosity = get_or<int>(section, "verbosity", config.output.verbosity);
    }

    // Target metrics must be part of the panel; widen the panel rather than
    // making the caller repeat them.
    for (auto target : config.search.target_metrics) {
        if (std::find(config.search.metrics.begin(), config.search.metrics.end(), target) ==
            config.search.metrics.end()) {
            config.search.metrics.push_back(target);
        }
    }

    if (config.dataset.path.empty()) fail(origin, "dataset.path is required");
    if (config.dataset.label_column.empty()) fail(origin, "dataset.label_column is required");
    if (config.output.runs < 1) fail(origin, "output.runs must be >= 1");
    config.search.validate();
    return config;
}

RunConfig load_config(const std::optional<std::string>& config_path,
                      const std::vector<std::pair<std::string, std::string>>& overrides) {
    json doc = default_doc();
    std::string origin = "<flags>";
    if (config_path) {
        origin = *config_path;
        std::ifstream in(*config_path);
        if (!in) throw ConfigError("cannot open config file: " + *config_path);
        std::ostringstream buf;
        buf << in.rdbuf();
        doc = json::parse(buf.str(), nullptr, false);
        if (doc.is_discarded()) fail(origin, "not valid JSON");
    }
    for (const auto& [path, value] : overrides) {
        apply_dotted_override(doc, path, value);
    }
    return parse_config_text(doc.dump(), origin);
}

std::string resolved_config_json(const RunConfig& config) {
    json doc;

    json dataset;
    dataset["path"] = config.dataset.path;
    dataset["label_column"] = config.dataset.label_column;
    dataset["missing_tokens"] = config.dataset.missing_tokens;
    dataset["positive_label"] =
        config.dataset.positive_label ? json(*config.dataset.positive_label) : json(nullptr);
    dataset["drop_missing_labels"] = config.dataset.drop_missing_labels;
    json hints = json::object();
    for (const auto& [column, kind] : config.dataset.type_hints) {
        hints[column] = kind == ColumnKind::numeric ? "numeric" : "categorical";
    }
    dataset["type_hints"] = std::move(hints);
    doc["dataset"] = std::move(dataset);

    json search;
    search["seed"] = config.search.seed;
    search["n_samples"] = config.search.n_samples;
    search["m"] = config.search.top_m;
    search["refinement_budget"] = config.search.refinement_budget;
    search["cv"] = {{"folds", config.search.cv_folds}, {"budget", config.search.cv_budget}};
    json models = json::array();
    for (auto kind : config.search.models) models.push_back(to_string(kind));
    search["models"] = std::move(models);
    json metrics = json::array();
    for (auto kind : config.search.metrics) metrics.push_back(to_string(kind));
    search["metrics"] = std::move(metrics);
    json targets = json::array();
    for (auto kind : config.search.target_metrics) targets.push_back(to_string(kind));
    search["target_metrics"] = std::move(targets);
    search["test_fraction"] = config.search.test_fraction;
    search["subsample_fraction"] = config.search.subsample_fraction;
    search["validation_fraction"] = config.search.validation_fraction;
    search["workers"] = config.search.workers;
    doc["search"] = std::move(search);

    json catalog;
    for (int s = 0; s < kNumStages; ++s) {
        json stage = json::array();
        for (const auto& method : config.search.catalog.stages[s]) {
            json entry;
            entry["name"] = method.name;
            json params = json::object();
            for (const auto& [key, value] : method.params) params[key] = value;
            entry["params"] = std::move(params);
            stage.push_back(std::move(entry));
        }
        catalog[stage_name(s)] = std::move(stage);
    }
    doc["catalog"] = std::move(catalog);

    doc["output"] = {{"dir", config.output.dir},
                     {"runs", config.output.runs},
                     {"verbosity", config.output.verbosity}};
    return doc.dump(2) + "\n";
}

} // namespace autopipe
