#include "autopipe/report.hpp"

#include "autopipe/common.hpp"
#include "autopipe/csv.hpp"
#include "autopipe/version.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <sstream>

namespace autopipe {

namespace {

using json = nlohmann::ordered_json;

std::string fixed4(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

std::string compact(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

json spec_to_json(const PipelineSpec& spec) {
    json arr = json::array();
    for (int i : spec.indices) arr.push_back(i);
    return arr;
}

json values_or_null(double v) {
    if (std::isnan(v)) return nullptr;
    return v;
}

json table_to_json(const ResultsTable& table) {
    json out;
    json models = json::array();
    for (auto m : table.models) models.push_back(to_string(m));
    json metrics = json::array();
    for (auto m : table.metrics) metrics.push_back(to_string(m));
    out["models"] = std::move(models);
    out["metrics"] = std::move(metrics);

    json rows = json::array();
    for (const auto& row : table.rows) {
        json r;
        r["spec"] = spec_to_json(row.spec);
        r["provenance"] = row.provenance;
        r["seed"] = row.pipeline_seed;
        r["failed"] = row.failed;
        if (row.failed) r["reason"] = row.failure_reason;
        json values;
        for (std::size_t m = 0; m < table.models.size(); ++m) {
            json per_model;
            for (std::size_t k = 0; k < table.metrics.size(); ++k) {
                per_model[to_string(table.metrics[k])] = values_or_null(row.values[m][k]);
            }
            values[to_string(table.models[m])] = std::move(per_model);
        }
        r["values"] = std::move(values);
        if (!row.audit.empty()) {
            json audit = json::array();
            for (const auto& event : row.audit) {
                audit.push_back(json{{"stage", event.stage}, {"message", event.message}});
            }
            r["audit"] = std::move(audit);
        }
        rows.push_back(std::move(r));
    }
    out["rows"] = std::move(rows);
    return out;
}

json report_to_json_doc(const SearchReport& report) {
    json doc;
    doc["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
    doc["seed"] = report.seed;
    doc["data"] = {{"train_rows", report.train_rows}, {"test_rows", report.test_rows}};

    json winner;
    winner["spec"] = spec_to_json(report.winner_spec);
    json methods;
    for (int s = 0; s < kNumStages; ++s) methods[stage_name(s)] = report.winner_methods[s];
    winner["methods"] = std::move(methods);
    winner["provenance"] = report.winner_provenance;
    winner["model"] = to_string(report.winner_model);
    json hp;
    for (const auto& [key, value] : report.winner_hyperparameters) hp[key] = value;
    winner["hyperparameters"] = std::move(hp);
    winner["cv_score"] = report.winner_cv_score;
    winner["validation_target"] = report.winner_validation_target;
    json test;
    for (const auto& [name, value] : report.test_metrics) test[name] = value;
    winner["test_metrics"] = std::move(test);
    winner["features"] = report.winner_feature_names;
    doc["winner"] = std::move(winner);

    doc["locked_model"] = to_string(report.locked_model);
    doc["incumbent"] = {{"spec", spec_to_json(report.incumbent_spec)},
                        {"validation_target", report.incumbent_target}};

    json prcc_doc;
    prcc_doc["computed"] = report.prcc_computed;
    if (report.prcc_computed) {
        json stages = json::array();
        for (int s = 0; s < static_cast<int>(report.prcc_report.stages.size()); ++s) {
            const auto& stage = report.prcc_report.stages[s];
            stages.push_back(json{{"stage", stage_name(s)},
                                  {"coefficient", stage.coefficient},
                                  {"rank", stage.influence_rank},
                                  {"degenerate", stage.degenerate}});
        }
        prcc_doc["stages"] = std::move(stages);
    }
    doc["prcc"] = std::move(prcc_doc);

    json refined = json::array();
    for (int s : report.refined_stages) refined.push_back(stage_name(s));
    doc["refined_stages"] = std::move(refined);

    json lhs;
    lhs["n_samples"] = report.design.n_samples;
    lhs["step_sizes"] = report.design.step_sizes;
    lhs["seed"] = report.design.seed;
    json draws = json::array();
    json indices = json::array();
    for (std::size_t i = 0; i < report.design.samples.rows; ++i) {
        json draw_row = json::array();
        for (int s = 0; s < kNumStages; ++s) draw_row.push_back(report.design.samples.at(i, s));
        draws.push_back(std::move(draw_row));
        indices.push_back(spec_to_json(report.design.specs[i]));
    }
    lhs["draws"] = std::move(draws);
    lhs["indices"] = std::move(indices);
    doc["lhs"] = std::move(lhs);

    doc["results_table"] = table_to_json(report.table);
    doc["pipeline_description"] = report.winner_pipeline_description;
    doc["warnings"] = report.warnings;
    return doc;
}

json experiment_to_json_doc(const ExperimentReport& experiment) {
    json doc;
    doc["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
    doc["base_seed"] = experiment.base_seed;
    doc["runs"] = experiment.runs;

    json aggregate;
    for (const auto& [name, stats] : experiment.aggregate) {
        aggregate[name] = {{"mean", stats.mean}, {"std", stats.stddev}};
    }
    doc["aggregate"] = std::move(aggregate);

    json per_run = json::array();
    for (const auto& run : experiment.per_run) {
        json r;
        r["seed"] = run.seed;
        r["ok"] = run.ok;
        if (run.ok) {
            r["winner_spec"] = spec_to_json(run.report.winner_spec);
            r["winner_model"] = to_string(run.report.winner_model);
            json test;
            for (const auto& [name, value] : run.report.test_metrics) test[name] = value;
            r["test_metrics"] = std::move(test);
        } else {
            r["error"] = run.error;
        }
        per_run.push_back(std::move(r));
    }
    doc["per_run"] = std::move(per_run);
    doc["warnings"] = experiment.warnings;
    return doc;
}

void render_search_doc(std::ostringstream& os, const json& doc) {
    os << doc["tool"]["name"].get<std::string>() << " "
       << doc["tool"]["version"].get<std::string>() << " search report\n";
    os << "seed " << doc["seed"] << " | train rows " << doc["data"]["train_rows"]
       << " | test rows " << doc["data"]["test_rows"] << "\n\n";

    const auto& winner = doc["winner"];
    os << "winner: pipeline " << winner["spec"].dump() << " ["
       << winner["provenance"].get<std::string>() << "]\n";
    for (const auto& [stage, method] : winner["methods"].items()) {
        os << "  " << stage << ": " << method.get<std::string>() << "\n";
    }
    os << "model: " << winner["model"].get<std::string>() << "\n";
    for (const auto& [key, value] : winner["hyperparameters"].items()) {
        os << "  " << key << " = " << compact(value.get<double>()) << "\n";
    }
    os << "validation target: " << fixed4(winner["validation_target"].get<double>()) << "\n";
    os << "cv score: " << fixed4(winner["cv_score"].get<double>()) << "\n";
    os << "test metrics:\n";
    for (const auto& [name, value] : winner["test_metrics"].items()) {
        os << "  " << name << ": " << fixed4(value.get<double>()) << "\n";
    }

    os << "\nlocked model: " << doc["locked_model"].get<std::string>() << "\n";
    os << "incumbent: " << doc["incumbent"]["spec"].dump() << " validation target "
       << fixed4(doc["incumbent"]["validation_target"].get<double>()) << "\n";

    os << "\nPRCC (stage index vs target):\n";
    if (doc["prcc"]["computed"].get<bool>()) {
        for (const auto& stage : doc["prcc"]["stages"]) {
            os << "  " << stage["stage"].get<std::string>() << ": "
               << fixed4(stage["coefficient"].get<double>()) << " (rank "
               << stage["rank"] << (stage["degenerate"].get<bool>() ? ", degenerate" : "")
               << ")\n";
        }
    } else {
        os << "  not computed\n";
    }
    os << "refined stages: " << doc["refined_stages"].dump() << "\n";
    os << "evaluated pipelines: " << doc["results_table"]["rows"].size() << "\n";

    if (!doc["warnings"].empty()) {
        os << "\nwarnings:\n";
        for (const auto& w : doc["warnings"]) os << "  - " << w.get<std::string>() << "\n";
    }
}

void render_experiment_doc(std::ostringstream& os, const json& doc) {
    os << doc["tool"]["name"].get<std::string>() << " "
       << doc["tool"]["version"].get<std::string>() << " experiment report\n";
    os << "base seed " << doc["base_seed"] << " | runs " << doc["runs"] << "\n\n";
    os << "aggregate test metrics (mean +/- std over successful runs):\n";
    for (const auto& [name, stats] : doc["aggregate"].items()) {
        os << "  " << name << ": " << fixed4(stats["mean"].get<double>()) << " +/-"
           << fixed4(stats["std"].get<double>()) << "\n";
    }
    os << "\nper run:\n";
    for (const auto& run : doc["per_run"]) {
        os << "  seed " << run["seed"] << ": ";
        if (run["ok"].get<bool>()) {
            os << "winner " << run["winner_spec"].dump() << " model "
               << run["winner_model"].get<std::string>();
            const auto& tm = run["test_metrics"];
            if (tm.contains("balanced_accuracy")) {
                os << " balanced_accuracy " << fixed4(tm["balanced_accuracy"].get<double>());
            }
            os << "\n";
        } else {
            os << "FAILED: " << run["error"].get<std::string>() << "\n";
        }
    }
    if (!doc["warnings"].empty()) {
        os << "\nwarnings:\n";
        for (const auto& w : doc["warnings"]) os << "  - " << w.get<std::string>() << "\n";
    }
}

} // namespace

std::string report_to_json(const SearchReport& report) {
    return report_to_json_doc(report).dump(2) + "\n";
}

std::string experiment_to_json(const ExperimentReport& experiment) {
    return experiment_to_json_doc(experiment).dump(2) + "\n";
}

std::string report_text_summary(const SearchReport& report) {
    std::ostringstream os;
    render_search_doc(os, report_to_json_doc(report));
    os << "\ntimings (s):\n";
    for (const auto& [phase, seconds] : report.timings_sec) {
        os << "  " << phase << ": " << fixed4(seconds) << "\n";
    }
    return os.str();
}

std::string experiment_text_summary(const ExperimentReport& experiment) {
    std::ostringstream os;
    render_experiment_doc(os, experiment_to_json_doc(experiment));
    return os.str();
}

std::string results_table_csv(const ResultsTable& table) {
    CsvTable csv;
    csv.header = {"row", "provenance", "seed"};
    for (int s = 0; s < kNumStages; ++s) {
        csv.header.push_back(std::string("i_") + stage_name(s));
    }
    csv.header.push_back("failed");
    csv.header.push_back("reason");
    for (auto model : table.models) {
        for (auto metric : table.metrics) {
            csv.header.push_back(to_string(model) + "." + to_string(metric));
        }
    }

    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        std::vector<std::string> out;
        out.push_back(std::to_string(i));
        out.push_back(row.provenance);
        out.push_back(std::to_string(row.pipeline_seed));
        for (int s = 0; s < kNumStages; ++s) {
            out.push_back(std::to_string(row.spec.indices[s]));
        }
        out.push_back(row.failed ? "1" : "0");
        out.push_back(row.failure_reason);
        for (std::size_t m = 0; m < table.models.size(); ++m) {
            for (std::size_t k = 0; k < table.metrics.size(); ++k) {
                const double v = row.values[m][k];
                out.push_back(std::isnan(v) ? "" : compact(v));
            }
        }
        csv.rows.push_back(std::move(out));
    }

    std::string text = csv_join(csv.header) + "\n";
    for (const auto& row : csv.rows) text += csv_join(row) + "\n";
    return text;
}

std::string render_report(const std::string& json_text) {
    json doc = json::parse(json_text, nullptr, true);
    std::ostringstream os;
    if (doc.contains("aggregate")) {
        render_experiment_doc(os, doc);
    } else if (doc.contains("winner")) {
        render_search_doc(os, doc);
    } else {
        throw DataError("not an autopipe report: missing 'winner' or 'aggregate'");
    }
    return os.str();
}

} // namespace autopipe
