#pragma once

#include <cstddef>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "edithumor/tensor.hpp"
#include "edithumor/text.hpp"

namespace edithumor {

using Rng = std::mt19937_64;

inline constexpr float kOovInitRange = 0.05f;

struct CoverageReport {
  std::size_t file_words = 0;
  std::size_t hits = 0;            // exact + lowercase fallback
  std::size_t lowercase_hits = 0;  // subset of hits found only via lowercasing
  std::size_t misses = 0;          // hits + misses == vocab size - 2
};

struct EmbeddingTable {
  Matrix<float> matrix;  // vocab size x D; row kPadId is zero
  CoverageReport coverage;
};

/// Uniform(-0.05, 0.05) rows drawn in id order; PAD row zero.
Matrix<float> random_embedding(std::size_t vocab_size, std::size_t dim, Rng& rng);

/// Reads a word2vec binary file. Each vocabulary token takes the vector of
/// the identically spelled file entry, else the first entry whose lowercased
/// spelling matches. Remaining rows (and UNK) are drawn uniformly from
/// (-0.05, 0.05) in id order. Throws FormatError on a bad header or truncated
/// data and DimMismatch when the file dimension differs from `dim`.
EmbeddingTable load_word2vec_binary(const std::filesystem::path& path, const Vocab& vocab,
                                    std::size_t dim, Rng& rng);

/// Writes the same format, each vector followed by '\n' when requested.
void write_word2vec_binary(const std::filesystem::path& path, std::span<const std::string> words,
                           const Matrix<float>& vectors, bool trailing_newline = true);

/// Rows of `table` for each id, as a tokens.size() x D matrix.
template <typename T>
Matrix<T> lookup_sequence(const Matrix<T>& table, std::span<const TokenId> tokens) {
  Matrix<T> out(tokens.size(), table.cols());
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const auto id = static_cast<std::size_t>(tokens[t]);
    if (id >= table.rows()) throw ShapeMismatch("token id outside the embedding table");
    const T* src = table.row(id);
    std::copy(src, src + table.cols(), out.row(t));
  }
  return out;
}

}  // namespace edithumor
