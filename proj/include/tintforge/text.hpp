#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace tintforge {

/// Half-open character range [begin, end) into a string.
struct CharRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  friend bool operator==(const CharRange&, const CharRange&) = default;
};

/// Half-open token range [first, first + count).
struct TokenRange {
  std::size_t first = 0;
  std::size_t count = 0;

  std::size_t end() const noexcept { return first + count; }
  friend bool operator==(const TokenRange&, const TokenRange&) = default;
};

struct TextToken {
  std::string text;
  CharRange chars;
  bool is_word = false;
};

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

/// Splits text into word tokens (maximal runs of ASCII alphanumerics and
/// non-ASCII bytes) and single-character punctuation tokens. Whitespace
/// separates tokens and is not emitted.
inline std::vector<TextToken> tokenize(std::string_view text) {
  auto is_word_byte = [](unsigned char c) { return std::isalnum(c) || c >= 0x80; };
  std::vector<TextToken> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    if (is_word_byte(c)) {
      std::size_t j = i;
      while (j < text.size() && is_word_byte(static_cast<unsigned char>(text[j]))) ++j;
      tokens.push_back({std::string(text.substr(i, j - i)), {i, j}, true});
      i = j;
    } else {
      tokens.push_back({std::string(1, text[i]), {i, i + 1}, false});
      ++i;
    }
  }
  return tokens;
}

/// Lowercased token texts, the key form used for lexicon lookups.
inline std::vector<std::string> token_keys(std::string_view text) {
  std::vector<std::string> keys;
  for (const auto& t : tokenize(text)) keys.push_back(to_lower(t.text));
  return keys;
}

}  // namespace tintforge
