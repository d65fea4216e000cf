#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace spikebci::csv {

struct Row {
  std::size_t line{0};  // 1-based line number in the source file
  std::vector<std::string> fields;
};

struct Table {
  std::string source;
  std::vector<std::string> header;
  std::vector<Row> rows;

  // Index of a named header column, or npos.
  std::size_t column(std::string_view name) const;
  std::size_t require_column(std::string_view name) const;
};

// Comma separated, header row first, no quoting. Blank lines and lines
// starting with '#' are skipped. Fields are whitespace-trimmed.
Table read(const std::filesystem::path& path);
Table parse(std::string_view text, std::string source);

std::vector<std::string> split(std::string_view line, char delim = ',');
std::string_view trim(std::string_view s);

// Locale-independent numeric parsing; throws ParseError naming the location.
double parse_double(std::string_view text, const std::string& source, std::size_t line,
                    const std::string& field);
long long parse_int(std::string_view text, const std::string& source, std::size_t line,
                    const std::string& field);

// Shortest representation that round-trips exactly.
std::string format_double(double value);

}  // namespace spikebci::csv
