#include "autopipe/csv.hpp"

#include "autopipe/common.hpp"

#include <fstream>
#include <sstream>

namespace autopipe {

namespace {

// State machine over the whole text; handles quoted fields, "" escapes,
// and both LF and CRLF record separators.
std::vector<std::vector<std::string>> parse_records(const std::string& text,
                                                    const std::string& origin) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;

    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        records.push_back(std::move(record));
        record.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
        case '"':
            if (!field.empty() || field_started) {
                throw DataError(origin + ": stray quote inside unquoted field");
            }
            in_quotes = true;
            field_started = true;
            break;
        case ',':
            end_field();
            break;
        case '\r':
            if (i + 1 < text.size() && text[i + 1] == '\n') break; // CRLF, handled by '\n'
            end_record();
            break;
        case '\n':
            end_record();
            break;
        default:
            field.push_back(c);
            field_started = true;
            break;
        }
    }
    if (in_quotes) throw DataError(origin + ": unterminated quoted field");
    if (field_started || !field.empty() || !record.empty()) end_record();
    return records;
}

} // namespace

CsvTable parse_csv(const std::string& text, const std::string& origin) {
    auto records = parse_records(text, origin);
    if (records.empty()) throw DataError(origin + ": empty CSV, header row is mandatory");

    CsvTable table;
    table.header = std::move(records.front());
    const std::size_t width = table.header.size();
    table.rows.reserve(records.size() - 1);
    for (std::size_t i = 1; i < records.size(); ++i) {
        // Tolerate a trailing blank line.
        if (records[i].size() == 1 && records[i][0].empty() && i + 1 == records.size()) break;
        if (records[i].size() != width) {
            throw DataError(origin + ": row " + std::to_string(i) + " has " +
                            std::to_string(records[i].size()) + " fields, header has " +
                            std::to_string(width));
        }
        table.rows.push_back(std::move(records[i]));
    }
    return table;
}

CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), path);
}

std::string csv_quote(const std::string& field) {
    const bool needs_quotes =
        field.find_first_of(",\"\r\n") != std::string::npos;
    if (!needs_quotes) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string csv_join(const std::vector<std::string>& fields) {
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) line.push_back(',');
        line += csv_quote(fields[i]);
    }
    return line;
}

void write_csv_file(const std::string& path, const CsvTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    out << csv_join(table.header) << '\n';
    for (const auto& row : table.rows) out << csv_join(row) << '\n';
}

} // namespace autopipe
