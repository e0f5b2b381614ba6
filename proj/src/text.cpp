#include "edithumor/text.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "edithumor/error.hpp"

namespace edithumor {

namespace {

bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_ascii_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (u >= 33 && u <= 47) || (u >= 58 && u <= 64) || (u >= 91 && u <= 96) ||
         (u >= 123 && u <= 126);
}

char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && is_ascii_space(text[pos])) ++pos;
    std::size_t end = pos;
    while (end < text.size() && !is_ascii_space(text[end])) ++end;
    std::size_t first = pos;
    std::size_t last = end;
    while (first < last && is_ascii_punct(text[first])) ++first;
    while (last > first && is_ascii_punct(text[last - 1])) --last;
    if (first < last) {
      std::string token(text.substr(first, last - first));
      std::transform(token.begin(), token.end(), token.begin(), ascii_lower);
      out.push_back(std::move(token));
    }
    pos = end;
  }
  return out;
}

Vocab::Vocab() {
  add(std::string(kPadToken));
  add(std::string(kUnkToken));
}

TokenId Vocab::lookup(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnkId : it->second;
}

std::vector<TokenId> Vocab::encode(std::span<const std::string> tokens) const {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(lookup(t));
  return ids;
}

TokenId Vocab::add(std::string token) {
  if (const auto it = index_.find(token); it != index_.end()) return it->second;
  const auto id = static_cast<TokenId>(tokens_.size());
  index_.emplace(token, id);
  tokens_.push_back(std::move(token));
  return id;
}

void Vocab::save(const std::filesystem::path& path, std::uint64_t seed) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vocab file " + path.string());
  out << "# vocab seed=" << seed << " size=" << tokens_.size() << '\n';
  for (const auto& t : tokens_) out << t << '\n';
  if (!out) throw IoError("failed writing vocab file " + path.string());
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open vocab file " + path.string());
  std::string line;
  if (!std::getline(in, line) || !line.starts_with('#')) {
    throw FormatError("vocab file " + path.string() + ": missing header line");
  }
  Vocab vocab;
  std::size_t lineno = 1;
  TokenId expected = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (expected < 2) {
      const auto reserved = expected == kPadId ? kPadToken : kUnkToken;
      if (line != reserved) {
        throw FormatError("vocab file line " + std::to_string(lineno) + ": expected " +
                          std::string(reserved));
      }
    } else {
      if (line.empty()) {
        throw FormatError("vocab file line " + std::to_string(lineno) + ": empty token");
      }
      if (vocab.add(line) != expected) {
        throw FormatError("vocab file line " + std::to_string(lineno) + ": duplicate token '" +
                          line + "'");
      }
    }
    ++expected;
  }
  if (expected < 2) throw FormatError("vocab file " + path.string() + ": missing reserved tokens");
  return vocab;
}

Vocab build_vocab(std::span<const std::vector<std::string>> sentences) {
  std::map<std::string, std::size_t> counts;
  for (const auto& sentence : sentences) {
    for (const auto& token : sentence) ++counts[token];
  }
  if (counts.empty()) throw EmptyCorpus("cannot build a vocabulary from an empty corpus");

  std::vector<std::pair<std::string, std::size_t>> ordered(counts.begin(), counts.end());
  // std::map iteration is already lexicographic, so a stable sort on count
  // alone gives the frequency-then-lexicographic order.
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  Vocab vocab;
  for (auto& [token, count] : ordered) {
    // Reserved spellings cannot come out of the tokenizer ('<' and '>' are
    // stripped), but a hand-built corpus could contain them.
    if (token == kPadToken || token == kUnkToken) continue;
    vocab.add(std::move(token));
  }
  return vocab;
}

}  // namespace edithumor
