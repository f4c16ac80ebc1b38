#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace commlfm {

// Small CSV reader: header row, comma separated, double-quoted fields may
// contain commas. Every row must have as many fields as the header.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Throws InputError naming the column when absent.
  std::size_t column_index(std::string_view name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

// Empty (after trimming) or "NA".
bool is_missing(std::string_view cell);

// Parsed number, or nullopt for missing or non-numeric cells.
std::optional<double> parse_cell(std::string_view cell);

// Shortest text that round-trips to the same double.
std::string format_double(double value);

}  // namespace commlfm
