#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace edithumor {

// RFC-4180 CSV: comma separated, fields optionally double-quoted, quotes
// escaped by doubling, quoted fields may span lines. CRLF and LF both end a
// record. Lines starting with '#' before the header are skipped so artifact
// headers (seed stamps) do not disturb readers.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  // 1-based physical line where each data row starts.
  std::vector<std::size_t> lines;

  std::optional<std::size_t> column(std::string_view name) const;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::filesystem::path& path);

std::string csv_quote(std::string_view field);
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace edithumor
