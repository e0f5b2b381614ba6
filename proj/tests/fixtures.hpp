#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "edithumor/corpus.hpp"
#include "edithumor/train.hpp"

namespace edithumor::fixture {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

// Synthetic Humicroedit-style records: `<word/>` spans, edit words, grades in
// [0,3] that depend on the edit word so there is something to learn.
std::vector<RawRecord> synthetic_records(std::size_t n, std::uint64_t seed,
                                         bool labeled = true);

// Task-2 pairs built from synthetic records, labels derived from grades.
std::vector<PairRecord> synthetic_pairs(std::size_t n, std::uint64_t seed);

void write_task1(const std::filesystem::path& path, const std::vector<RawRecord>& records);
void write_task2(const std::filesystem::path& path, const std::vector<PairRecord>& pairs);

// word2vec binary covering most synthetic words (some capitalized, some
// missing), dimension `dim`.
void write_synthetic_embeddings(const std::filesystem::path& path, std::size_t dim,
                                std::uint64_t seed);

struct ToyCorpus {
  Vocab vocab;
  std::vector<Example> examples;
};
ToyCorpus toy_corpus(std::size_t n, std::uint64_t seed, int seq_len);

TrainConfig toy_train_config();

}  // namespace edithumor::fixture
