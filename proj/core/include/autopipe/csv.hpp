#pragma once

#include <string>
#include <vector>

namespace autopipe {

/// Raw CSV contents: a header row plus string cells. Quoting per RFC 4180
/// (double-quote escaping, commas and newlines allowed inside quoted fields).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv_file(const std::string& path);
CsvTable parse_csv(const std::string& text, const std::string& origin = "<string>");

std::string csv_quote(const std::string& field);
std::string csv_join(const std::vector<std::string>& fields);
void write_csv_file(const std::string& path, const CsvTable& table);

} // namespace autopipe
