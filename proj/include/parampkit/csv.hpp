#pragma once

#include <string>
#include <vector>

namespace parampkit {

// Minimal comma-separated table with a header row. All values are doubles;
// formatting is fixed so identical data produces identical bytes.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    size_t column_index(const std::string& name) const;
    std::vector<double> column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const CsvTable& table);
std::string format_csv(const CsvTable& table);

}  // namespace parampkit
