#pragma once

#include <string>
#include <vector>

namespace crowdagg {

// Minimal comma-separated table support: plain comma splitting, no quoting.
// Field values therefore must not contain commas; writers enforce this.

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    // 1-based line number of each row in the source file, for error messages.
    std::vector<long> line_numbers;

    // Index of a column name, or -1.
    int column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

// Parses from an in-memory string; `origin` names the source in errors.
CsvTable parse_csv(const std::string& text, const std::string& origin);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// Writes `text` verbatim; used for non-tabular outputs (Markdown reports).
void write_text_file(const std::string& path, const std::string& text);

std::string format_double(double v);  // shortest round-trip decimal form

long parse_long(const std::string& s, const std::string& context);
double parse_double(const std::string& s, const std::string& context);

}  // namespace crowdagg
