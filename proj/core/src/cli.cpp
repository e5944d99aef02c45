#include "autopipe/cli.hpp"

#include "autopipe/common.hpp"
#include "autopipe/config.hpp"
#include "autopipe/report.hpp"
#include "autopipe/version.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace autopipe {

namespace {

namespace fs = std::filesystem;

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
}

struct CommonFlags {
    std::optional<std::string> config_path;
    std::vector<std::string> overrides; // key=value
    std::optional<std::string> dataset, label, out;
    std::optional<std::int64_t> seed, runs, workers;

    std::vector<std::pair<std::string, std::string>> resolve() const {
        std::vector<std::pair<std::string, std::string>> out_pairs;
        auto add = [&](const std::string& key, const std::string& value) {
            out_pairs.emplace_back(key, value);
        };
        for (const auto& entry : overrides) {
            const auto eq = entry.find('=');
            if (eq == std::string::npos) {
                throw ConfigError("--set expects key=value, got '" + entry + "'");
            }
            add(entry.substr(0, eq), entry.substr(eq + 1));
        }
        // Named shortcuts override --set entries.
        if (dataset) add("dataset.path", *dataset);
        if (label) add("dataset.label_column", *label);
        if (out) add("output.dir", *out);
        if (seed) add("search.seed", std::to_string(*seed));
        if (runs) add("output.runs", std::to_string(*runs));
        if (workers) add("search.workers", std::to_string(*workers));
        return out_pairs;
    }
};

void attach_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "JSON config file");
    cmd->add_option("--dataset", flags.dataset, "CSV dataset path");
    cmd->add_option("--label", flags.label, "label column name");
    cmd->add_option("--seed", flags.seed, "global seed");
    cmd->add_option("--runs", flags.runs, "number of independent runs");
    cmd->add_option("--workers", flags.workers, "worker threads (0 = hardware)");
    cmd->add_option("--out", flags.out, "output directory");
    cmd->add_option("--set", flags.overrides,
                    "override any config key by dotted path, e.g. --set search.cv.folds=3");
}

class RunLog {
public:
    void open(const fs::path& path) { stream_.open(path, std::ios::binary); }

    void line(const std::string& text) {
        if (stream_.is_open()) stream_ << text << "\n" << std::flush;
    }

private:
    std::ofstream stream_;
};

int execute_search(const CommonFlags& flags, bool experiment_mode, int verbosity_delta) {
    RunConfig config;
    TabularDataset dataset;
    // Setup failures are configuration errors: exit 1, nothing written.
    try {
        config = load_config(flags.config_path, flags.resolve());
        if (!experiment_mode && config.output.runs != 1) {
            throw ConfigError("'run' executes a single search (output.runs = " +
                              std::to_string(config.output.runs) +
                              "); use the 'experiment' verb for multiple runs");
        }
        if (!fs::exists(config.dataset.path)) {
            throw ConfigError("dataset file not found: " + config.dataset.path);
        }
        dataset = load_csv(config.dataset.path, config.dataset.load_options());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    config.output.verbosity += verbosity_delta;
    const int verbosity = config.output.verbosity;
    const fs::path out_dir = config.output.dir;
    RunLog log;
    try {
        fs::create_directories(out_dir);
        log.open(out_dir / "run.log");
        log.line(std::string(kToolName) + " " + kToolVersion);
        log.line("dataset: " + config.dataset.path);
        {
            std::istringstream summary(dataset.summary());
            std::string line;
            while (std::getline(summary, line)) log.line(line);
        }
        write_file(out_dir / "resolved_config.json", resolved_config_json(config));

        if (verbosity >= 2) std::cout << dataset.summary();

        if (!experiment_mode) {
            const SearchReport report = run_search(config.search, dataset);
            write_file(out_dir / "report.json", report_to_json(report));
            write_file(out_dir / "results_table.csv", results_table_csv(report.table));
            const std::string summary = report_text_summary(report);
            write_file(out_dir / "summary.txt", summary);
            log.line("search complete");
            if (verbosity >= 1) std::cout << summary;
        } else {
            const ExperimentReport experiment =
                run_experiment(config.search, dataset, config.output.runs);
            for (std::size_t i = 0; i < experiment.per_run.size(); ++i) {
                const auto& run = experiment.per_run[i];
                if (!run.ok) {
                    log.line("run " + std::to_string(i) + " failed: " + run.error);
                    continue;
                }
                char name[32];
                std::snprintf(name, sizeof(name), "run_%03zu", i);
                const fs::path run_dir = out_dir / name;
                fs::create_directories(run_dir);
                write_file(run_dir / "report.json", report_to_json(run.report));
                write_file(run_dir / "results_table.csv",
                           results_table_csv(run.report.table));
                write_file(run_dir / "summary.txt", report_text_summary(run.report));
            }
            write_file(out_dir / "experiment.json", experiment_to_json(experiment));
            const std::string summary = experiment_text_summary(experiment);
            write_file(out_dir / "summary.txt", summary);
            log.line("experiment complete");
            if (verbosity >= 1) std::cout << summary;

            bool any_ok = false;
            for (const auto& run : experiment.per_run) any_ok = any_ok || run.ok;
            if (!any_ok) throw Error("every run failed");
        }
    } catch (const std::exception& e) {
        log.line(std::string("error: ") + e.what());
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

int execute_inspect(const std::string& path) {
    try {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ConfigError("cannot open report: " + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        std::cout << render_report(buf.str());
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace

int cli_main(const std::vector<std::string>& args) {
    CLI::App app{std::string(kToolName) +
                 " - automated preprocessing pipeline search for tabular classification"};
    app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
    app.require_subcommand(1);

    CommonFlags run_flags, exp_flags;
    int run_verbose = 0, exp_verbose = 0;

    auto* run_cmd = app.add_subcommand("run", "single pipeline search");
    attach_common(run_cmd, run_flags);
    run_cmd->add_flag("-v,--verbose", run_verbose, "increase verbosity");

    auto* exp_cmd = app.add_subcommand("experiment", "multiple seeded runs with aggregation");
    attach_common(exp_cmd, exp_flags);
    exp_cmd->add_flag("-v,--verbose", exp_verbose, "increase verbosity");

    std::string report_path;
    auto* inspect_cmd = app.add_subcommand("inspect", "pretty-print a report file");
    inspect_cmd->add_option("report", report_path, "report.json or experiment.json")
        ->required();

    try {
        // CLI11 wants argv-style reversed vector when parsing strings.
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    if (run_cmd->parsed()) return execute_search(run_flags, false, run_verbose);
    if (exp_cmd->parsed()) return execute_search(exp_flags, true, exp_verbose);
    if (inspect_cmd->parsed()) return execute_inspect(report_path);
    return 1;
}

int cli_main(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return cli_main(args);
}

} // namespace autopipe
