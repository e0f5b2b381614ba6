#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace edithumor {

using TokenId = std::int32_t;

inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kUnkId = 1;
inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kUnkToken = "<unk>";

/// Lowercases ASCII letters, splits on whitespace, strips leading and
/// trailing ASCII punctuation from every piece and drops empty pieces.
/// Non-ASCII bytes pass through untouched.
std::vector<std::string> tokenize(std::string_view text);

/// Token <-> id mapping. Ids are dense in [0, size()); 0 and 1 are reserved
/// for padding and unknown tokens.
class Vocab {
 public:
  Vocab();

  TokenId lookup(std::string_view token) const;
  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<TokenId> encode(std::span<const std::string> tokens) const;

  // Appends a new token; returns its id. Existing tokens keep their id.
  TokenId add(std::string token);

  // One token per line; line 1 is a "# ..." header carrying the seed, and
  // token id k sits on 1-based line k + 2.
  void save(const std::filesystem::path& path, std::uint64_t seed) const;
  static Vocab load(const std::filesystem::path& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

/// Builds a vocabulary over tokenized sentences. Ids after the reserved pair
/// are assigned by descending frequency, ties broken lexicographically.
/// Throws EmptyCorpus when the corpus contains no tokens.
Vocab build_vocab(std::span<const std::vector<std::string>> sentences);

}  // namespace edithumor
