#include "edithumor/embed.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "edithumor/error.hpp"

namespace edithumor {

namespace {

float decode_le_f32(const char* p) {
  std::uint32_t bits = 0;
  for (int i = 3; i >= 0; --i) bits = (bits << 8) | static_cast<unsigned char>(p[i]);
  return std::bit_cast<float>(bits);
}

void encode_le_f32(float v, char* p) {
  auto bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) {
    p[i] = static_cast<char>(bits & 0xFFu);
    bits >>= 8;
  }
}

std::string ascii_lower(std::string s) {
  for (auto& c : s) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return s;
}

void fill_uniform(float* row, std::size_t dim, Rng& rng) {
  std::uniform_real_distribution<float> dist(-kOovInitRange, kOovInitRange);
  for (std::size_t d = 0; d < dim; ++d) row[d] = dist(rng);
}

}  // namespace

Matrix<float> random_embedding(std::size_t vocab_size, std::size_t dim, Rng& rng) {
  Matrix<float> m(vocab_size, dim);
  for (std::size_t id = 0; id < vocab_size; ++id) {
    if (id != static_cast<std::size_t>(kPadId)) fill_uniform(m.row(id), dim, rng);
  }
  return m;
}

EmbeddingTable load_word2vec_binary(const std::filesystem::path& path, const Vocab& vocab,
                                    std::size_t dim, Rng& rng) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open embeddings file " + path.string());

  std::string header;
  if (!std::getline(in, header)) throw FormatError("word2vec: missing header");
  std::istringstream hs(header);
  long long count = -1, file_dim = -1;
  if (!(hs >> count >> file_dim) || count < 0 || file_dim <= 0) {
    throw FormatError("word2vec: bad header '" + header + "'");
  }
  if (static_cast<std::size_t>(file_dim) != dim) {
    throw DimMismatch("word2vec: file dimension " + std::to_string(file_dim) +
                      " but model expects " + std::to_string(dim));
  }

  EmbeddingTable table;
  table.matrix = Matrix<float>(vocab.size(), dim);
  enum class Source : unsigned char { kNone, kLower, kExact };
  std::vector<Source> source(vocab.size(), Source::kNone);

  std::vector<char> payload(dim * 4);
  std::string word;
  for (long long e = 0; e < count; ++e) {
    word.clear();
    int ch = in.get();
    while (ch == '\n') ch = in.get();
    while (ch != EOF && ch != ' ') {
      word.push_back(static_cast<char>(ch));
      ch = in.get();
    }
    if (ch == EOF) {
      throw FormatError("word2vec: truncated at entry " + std::to_string(e) + " of " +
                        std::to_string(count));
    }
    if (word.empty()) throw FormatError("word2vec: empty token at entry " + std::to_string(e));
    if (!in.read(payload.data(), static_cast<std::streamsize>(payload.size()))) {
      throw FormatError("word2vec: truncated vector for '" + word + "'");
    }
    if (in.peek() == '\n') in.get();

    auto store = [&](TokenId id, Source how) {
      float* row = table.matrix.row(static_cast<std::size_t>(id));
      for (std::size_t d = 0; d < dim; ++d) row[d] = decode_le_f32(payload.data() + 4 * d);
      source[static_cast<std::size_t>(id)] = how;
    };
    const TokenId exact = vocab.lookup(word);
    if (exact > kUnkId) {
      if (source[exact] != Source::kExact) store(exact, Source::kExact);
      continue;
    }
    const TokenId lower = vocab.lookup(ascii_lower(word));
    if (lower > kUnkId && source[lower] == Source::kNone) store(lower, Source::kLower);
  }
  table.coverage.file_words = static_cast<std::size_t>(count);

  for (std::size_t id = 0; id < vocab.size(); ++id) {
    if (id == static_cast<std::size_t>(kPadId)) continue;
    if (source[id] == Source::kNone) {
      fill_uniform(table.matrix.row(id), dim, rng);
      if (id != static_cast<std::size_t>(kUnkId)) ++table.coverage.misses;
    } else {
      ++table.coverage.hits;
      if (source[id] == Source::kLower) ++table.coverage.lowercase_hits;
    }
  }
  return table;
}

void write_word2vec_binary(const std::filesystem::path& path, std::span<const std::string> words,
                           const Matrix<float>& vectors, bool trailing_newline) {
  require_size(vectors.rows(), words.size(), "word2vec rows");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << words.size() << ' ' << vectors.cols() << '\n';
  std::vector<char> buf(vectors.cols() * 4);
  for (std::size_t i = 0; i < words.size(); ++i) {
    out << words[i] << ' ';
    for (std::size_t d = 0; d < vectors.cols(); ++d) encode_le_f32(vectors(i, d), buf.data() + 4 * d);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (trailing_newline) out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace edithumor
