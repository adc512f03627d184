#include "cascade/csv.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cascade::csv {

std::string formatDouble(double v) {
    std::array<char, 64> buf{};
    const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc{}) {
        throw std::runtime_error("csv: cannot format number");
    }
    return std::string(buf.data(), end);
}

void write(const std::filesystem::path& path, const Table& table) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        out << (i ? "," : "") << table.header[i];
    }
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out << (i ? "," : "") << formatDouble(row[i]);
        }
        out << '\n';
    }
    if (!out) {
        throw std::runtime_error("write to " + path.string() + " failed");
    }
}

Table read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    Table table;
    std::string line;
    if (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            table.header.push_back(cell);
        }
    }
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<double> row;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            const std::size_t comma = std::min(line.find(',', pos), line.size());
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(line.data() + pos, line.data() + comma, v);
            if (ec != std::errc{} || ptr != line.data() + comma) {
                throw std::runtime_error("csv: bad number in " + path.string() + ": " + line);
            }
            row.push_back(v);
            pos = comma + 1;
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace cascade::csv
