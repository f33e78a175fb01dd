#include "parampkit/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace parampkit {

size_t CsvTable::column_index(const std::string& name) const {
    for (size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == name) return i;
    }
    throw std::invalid_argument("missing CSV column: " + name);
}

std::vector<double> CsvTable::column(const std::string& name) const {
    const size_t idx = column_index(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& row : rows) out.push_back(row.at(idx));
    return out;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open CSV file: " + path);

    CsvTable table;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;

        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!cells.empty() && line.back() == ',') cells.push_back("");

        if (table.columns.empty()) {
            table.columns = cells;
            continue;
        }
        if (cells.size() != table.columns.size()) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": row has " + std::to_string(cells.size()) +
                                     " cells, expected " + std::to_string(table.columns.size()));
        }
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) {
            try {
                size_t pos = 0;
                row.push_back(std::stod(c, &pos));
                if (pos != c.size()) throw std::invalid_argument(c);
            } catch (const std::exception&) {
                throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                         ": cannot parse numeric cell '" + c + "'");
            }
        }
        table.rows.push_back(std::move(row));
    }
    if (table.columns.empty()) throw std::runtime_error("empty CSV file: " + path);
    return table;
}

std::string format_csv(const CsvTable& table) {
    std::string out;
    for (size_t i = 0; i < table.columns.size(); ++i) {
        out += table.columns[i];
        out += i + 1 < table.columns.size() ? "," : "\n";
    }
    char buf[64];
    for (const auto& row : table.rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.12g", row[i]);
            out += buf;
            out += i + 1 < row.size() ? "," : "\n";
        }
    }
    return out;
}

void write_csv(const std::string& path, const CsvTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write CSV file: " + path);
    out << format_csv(table);
}

}  // namespace parampkit
