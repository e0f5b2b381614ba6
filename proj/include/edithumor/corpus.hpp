#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "edithumor/text.hpp"

namespace edithumor {

inline constexpr double kMinGrade = 0.0;
inline constexpr double kMaxGrade = 3.0;

// One row of a Task-1 file. `original` holds exactly one `<word/>` span.
struct RawRecord {
  std::string id;
  std::string original;
  std::string edit;
  std::string grades;  // raw annotator digits, kept verbatim
  std::optional<double> mean_grade;
};

// Fixed-length model input. Positions at or past `true_length` hold kPadId.
struct Example {
  std::string id;
  std::vector<TokenId> tokens;
  int true_length = 0;
  std::optional<double> target;
};

// One row of a Task-2 file. label: 0 tie, 1 side a funnier, 2 side b funnier.
struct PairRecord {
  std::string id;
  RawRecord a;
  RawRecord b;
  std::optional<int> label;
};

/// Replaces the `<word/>` span of `original` with `edit`. Every other byte is
/// preserved. Throws MalformedEdit unless there is exactly one `<` and exactly
/// one `/>` after it, or when `edit` is empty.
std::string apply_edit(std::string_view original, std::string_view edit);

std::vector<RawRecord> read_task1_csv(std::istream& in);
std::vector<RawRecord> load_task1_csv(const std::filesystem::path& path);
void write_task1_csv(std::ostream& out, std::span<const RawRecord> records);

std::vector<PairRecord> read_task2_csv(std::istream& in);
std::vector<PairRecord> load_task2_csv(const std::filesystem::path& path);

// True when the header row looks like a Task-2 file (has `original1`).
bool is_task2_csv(const std::filesystem::path& path);

/// Tokens of the edited headline.
std::vector<std::string> edited_tokens(const RawRecord& record);

Example to_example(const RawRecord& record, const Vocab& vocab, int seq_len);

struct LoadReport {
  std::size_t records = 0;
  std::size_t labeled = 0;
  std::vector<std::string> empty_after_tokenize;  // ids
  std::size_t truncated = 0;                      // token count > seq_len
};

std::vector<Example> to_examples(std::span<const RawRecord> records, const Vocab& vocab,
                                 int seq_len, LoadReport* report = nullptr);

std::string format_real(double value);

}  // namespace edithumor
