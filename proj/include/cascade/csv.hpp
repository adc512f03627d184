#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace cascade::csv {

/// Shortest decimal string that parses back to exactly `v`.
std::string formatDouble(double v);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

void write(const std::filesystem::path& path, const Table& table);
Table read(const std::filesystem::path& path);

}  // namespace cascade::csv
