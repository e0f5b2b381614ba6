#include "edithumor/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <ostream>

#include "edithumor/csv.hpp"
#include "edithumor/error.hpp"

namespace edithumor {

std::string apply_edit(std::string_view original, std::string_view edit) {
  if (edit.empty()) throw MalformedEdit("edit word is empty");
  const auto open = original.find('<');
  const auto close = original.find("/>");
  if (open == std::string_view::npos || close == std::string_view::npos) {
    throw MalformedEdit("headline has no <word/> span: " + std::string(original));
  }
  if (original.find('<', open + 1) != std::string_view::npos ||
      original.find("/>", close + 2) != std::string_view::npos) {
    throw MalformedEdit("headline has more than one edit span: " + std::string(original));
  }
  if (close < open) {
    throw MalformedEdit("edit span delimiters out of order: " + std::string(original));
  }
  std::string out;
  out.reserve(original.size() - (close + 2 - open) + edit.size());
  out.append(original.substr(0, open));
  out.append(edit);
  out.append(original.substr(close + 2));
  return out;
}

std::string format_real(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

namespace {

std::string row_context(std::size_t line) { return "line " + std::to_string(line) + ": "; }

std::optional<double> parse_grade(const std::string& field, std::size_t line,
                                  std::string_view what) {
  if (field.empty()) return std::nullopt;
  double value = 0.0;
  const auto* end = field.data() + field.size();
  const auto res = std::from_chars(field.data(), end, value);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw ParseError(row_context(line) + std::string(what) + " is not a number: '" + field + "'");
  }
  if (!(value >= kMinGrade && value <= kMaxGrade)) {
    throw ParseError(row_context(line) + std::string(what) + " outside [0,3]: " + field);
  }
  return value;
}

struct Task1Columns {
  std::size_t id, original, edit;
  std::optional<std::size_t> grades, mean_grade;
};

Task1Columns resolve_columns(const CsvTable& table, std::string_view suffix) {
  auto required = [&](std::string_view base) {
    const std::string name = std::string(base) + std::string(suffix);
    const auto col = table.column(name);
    if (!col) throw MissingColumn("CSV header lacks required column '" + name + "'");
    return *col;
  };
  Task1Columns cols{};
  cols.id = suffix.empty() ? required("id") : 0;
  cols.original = required("original");
  cols.edit = required("edit");
  cols.grades = table.column("grades" + std::string(suffix));
  cols.mean_grade = table.column("meanGrade" + std::string(suffix));
  return cols;
}

RawRecord extract_record(const std::vector<std::string>& row, const Task1Columns& cols,
                         std::size_t line, std::string_view side) {
  const std::string where = side.empty() ? std::string{} : " (side " + std::string(side) + ")";
  RawRecord r;
  r.id = row[cols.id];
  r.original = row[cols.original];
  r.edit = row[cols.edit];
  if (cols.grades) r.grades = row[*cols.grades];
  if (cols.mean_grade) r.mean_grade = parse_grade(row[*cols.mean_grade], line, "meanGrade" + where);
  try {
    (void)apply_edit(r.original, r.edit);
  } catch (const MalformedEdit& e) {
    throw ParseError(row_context(line) + "malformed original" + where + ": " + e.what());
  }
  return r;
}

void check_width(const CsvTable& table, std::size_t row) {
  if (table.rows[row].size() != table.header.size()) {
    throw ParseError(row_context(table.lines[row]) + "expected " +
                     std::to_string(table.header.size()) + " fields, found " +
                     std::to_string(table.rows[row].size()));
  }
}

std::vector<RawRecord> task1_from_table(const CsvTable& table) {
  if (table.header.empty()) throw MissingColumn("CSV file has no header row");
  const auto cols = resolve_columns(table, "");
  std::vector<RawRecord> out;
  out.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    check_width(table, i);
    out.push_back(extract_record(table.rows[i], cols, table.lines[i], ""));
  }
  return out;
}

std::vector<PairRecord> task2_from_table(const CsvTable& table) {
  if (table.header.empty()) throw MissingColumn("CSV file has no header row");
  const auto id_col = table.column("id");
  if (!id_col) throw MissingColumn("CSV header lacks required column 'id'");
  auto cols_a = resolve_columns(table, "1");
  auto cols_b = resolve_columns(table, "2");
  cols_a.id = cols_b.id = *id_col;
  const auto label_col = table.column("label");

  std::vector<PairRecord> out;
  out.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    check_width(table, i);
    const auto& row = table.rows[i];
    const auto line = table.lines[i];
    PairRecord p;
    p.id = row[*id_col];
    p.a = extract_record(row, cols_a, line, "a");
    p.b = extract_record(row, cols_b, line, "b");
    // Official pair ids look like "<id_a>-<id_b>".
    if (const auto dash = p.id.find('-'); dash != std::string::npos) {
      p.a.id = p.id.substr(0, dash);
      p.b.id = p.id.substr(dash + 1);
    } else {
      p.a.id = p.id + "#1";
      p.b.id = p.id + "#2";
    }
    if (label_col && !row[*label_col].empty()) {
      const auto& f = row[*label_col];
      if (f != "0" && f != "1" && f != "2") {
        throw ParseError(row_context(line) + "label must be 0, 1 or 2, found '" + f + "'");
      }
      p.label = f[0] - '0';
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

std::vector<RawRecord> read_task1_csv(std::istream& in) { return task1_from_table(read_csv(in)); }

std::vector<RawRecord> load_task1_csv(const std::filesystem::path& path) {
  try {
    return task1_from_table(read_csv_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_task1_csv(std::ostream& out, std::span<const RawRecord> records) {
  write_csv_row(out, {"id", "original", "edit", "grades", "meanGrade"});
  for (const auto& r : records) {
    write_csv_row(out, {r.id, r.original, r.edit, r.grades,
                        r.mean_grade ? format_real(*r.mean_grade) : std::string{}});
  }
}

std::vector<PairRecord> read_task2_csv(std::istream& in) { return task2_from_table(read_csv(in)); }

std::vector<PairRecord> load_task2_csv(const std::filesystem::path& path) {
  try {
    return task2_from_table(read_csv_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

bool is_task2_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.starts_with('#')) continue;
    return line.find("original1") != std::string::npos;
  }
  return false;
}

std::vector<std::string> edited_tokens(const RawRecord& record) {
  return tokenize(apply_edit(record.original, record.edit));
}

Example to_example(const RawRecord& record, const Vocab& vocab, int seq_len) {
  const auto tokens = edited_tokens(record);
  Example ex;
  ex.id = record.id;
  ex.target = record.mean_grade;
  ex.true_length = static_cast<int>(std::min<std::size_t>(tokens.size(), seq_len));
  ex.tokens.assign(static_cast<std::size_t>(seq_len), kPadId);
  for (int t = 0; t < ex.true_length; ++t) ex.tokens[t] = vocab.lookup(tokens[t]);
  return ex;
}

std::vector<Example> to_examples(std::span<const RawRecord> records, const Vocab& vocab,
                                 int seq_len, LoadReport* report) {
  std::vector<Example> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    out.push_back(to_example(r, vocab, seq_len));
    if (report) {
      ++report->records;
      if (r.mean_grade) ++report->labeled;
      if (out.back().true_length == 0) report->empty_after_tokenize.push_back(r.id);
      if (edited_tokens(r).size() > static_cast<std::size_t>(seq_len)) ++report->truncated;
    }
  }
  return out;
}

}  // namespace edithumor
