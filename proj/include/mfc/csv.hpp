#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace mfc::csv {

// Shortest round-trip decimal representation.
std::string format_double(double x);

// Opens for writing and throws std::runtime_error if that fails.
std::ofstream open(const std::filesystem::path& path);

// Column-wise writer: header plus equally long columns.
void write_columns(const std::filesystem::path& path,
                   const std::vector<std::string>& header,
                   const std::vector<std::vector<double>>& columns);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

Table read(const std::filesystem::path& path);

}  // namespace mfc::csv
