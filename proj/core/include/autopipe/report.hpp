#pragma once

#include "autopipe/search.hpp"

#include <string>

namespace autopipe {

/// Canonical machine-readable report. Deterministic: fixed key order, no
/// wall-clock content, so identical runs serialize byte-identically.
std::string report_to_json(const SearchReport& report);
std::string experiment_to_json(const ExperimentReport& experiment);

/// Human-readable summaries. Headline numbers are printed from the same
/// doubles the JSON carries; timings appear here only.
std::string report_text_summary(const SearchReport& report);
std::string experiment_text_summary(const ExperimentReport& experiment);

std::string results_table_csv(const ResultsTable& table);

/// Pretty-print a previously written report or experiment JSON document.
std::string render_report(const std::string& json_text);

} // namespace autopipe
