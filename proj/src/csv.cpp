#include "edithumor/csv.hpp"

#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>

#include "edithumor/error.hpp"

namespace edithumor {

std::optional<std::size_t> CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

namespace {

// Splits the whole buffer into records. Returns records with the physical
// line on which each one starts.
void parse_records(std::string_view text,
                   std::vector<std::vector<std::string>>& records,
                   std::vector<std::size_t>& starts) {
  std::size_t line = 1;
  std::size_t pos = 0;
  const std::size_t n = text.size();

  while (pos < n) {
    std::vector<std::string> record;
    std::string field;
    const std::size_t record_line = line;
    bool in_quotes = false;
    bool field_was_quoted = false;
    bool done = false;

    while (!done) {
      if (pos >= n) {
        if (in_quotes) {
          throw ParseError("CSV: unterminated quoted field starting on line " +
                           std::to_string(record_line));
        }
        record.push_back(std::move(field));
        done = true;
        break;
      }
      const char ch = text[pos];
      if (in_quotes) {
        if (ch == '"') {
          if (pos + 1 < n && text[pos + 1] == '"') {
            field.push_back('"');
            pos += 2;
          } else {
            in_quotes = false;
            ++pos;
          }
        } else {
          if (ch == '\n') ++line;
          field.push_back(ch);
          ++pos;
        }
        continue;
      }
      switch (ch) {
        case '"':
          if (field.empty() && !field_was_quoted) {
            in_quotes = true;
            field_was_quoted = true;
          } else {
            // Stray quote inside an unquoted field; keep it literally.
            field.push_back(ch);
          }
          ++pos;
          break;
        case ',':
          record.push_back(std::move(field));
          field.clear();
          field_was_quoted = false;
          ++pos;
          break;
        case '\r':
          ++pos;
          if (pos < n && text[pos] == '\n') ++pos;
          ++line;
          record.push_back(std::move(field));
          done = true;
          break;
        case '\n':
          ++pos;
          ++line;
          record.push_back(std::move(field));
          done = true;
          break;
        default:
          field.push_back(ch);
          ++pos;
      }
    }

    // A blank physical line yields a single empty field; drop it.
    if (record.size() == 1 && record[0].empty()) continue;
    records.push_back(std::move(record));
    starts.push_back(record_line);
  }
}

}  // namespace

CsvTable read_csv(std::istream& in) {
  std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  std::string_view view(text);
  if (view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);

  // Skip leading comment lines.
  std::size_t skipped_lines = 0;
  while (view.starts_with('#')) {
    const auto eol = view.find('\n');
    view = eol == std::string_view::npos ? std::string_view{} : view.substr(eol + 1);
    ++skipped_lines;
  }

  std::vector<std::vector<std::string>> records;
  std::vector<std::size_t> starts;
  parse_records(view, records, starts);

  CsvTable table;
  if (records.empty()) return table;
  table.header = std::move(records.front());
  for (std::size_t i = 1; i < records.size(); ++i) {
    table.rows.push_back(std::move(records[i]));
    table.lines.push_back(starts[i] + skipped_lines);
  }
  return table;
}

CsvTable read_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_csv(in);
}

std::string csv_quote(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (const char ch : field) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << csv_quote(fields[i]);
  }
  out << '\n';
}

}  // namespace edithumor
