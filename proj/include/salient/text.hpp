#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace salient::text {

// Matching normalization: case-fold, collapse internal whitespace, trim.
// Folding is ASCII-only; bytes >= 0x80 are passed through untouched and
// treated as word characters so UTF-8 sequences never get split.

inline bool is_word_char(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z') || c >= 0x80;
}

inline bool is_space_char(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline char fold_char(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

inline std::string normalize(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (is_space_char(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(fold_char(c));
  }
  return out;
}

// Half-open [start, end) character span of a token within the source string.
struct Token {
  std::size_t start = 0;
  std::size_t end = 0;
};

// Tokens are maximal runs of word characters; everything else is a boundary.
inline std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_word_char(static_cast<unsigned char>(s[i]))) {
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < s.size() && is_word_char(static_cast<unsigned char>(s[i]))) ++i;
    tokens.push_back({start, i});
  }
  return tokens;
}

// Normal form for matching a phrase against token spans of running text:
// case-folded, whitespace collapsed, and stripped of leading/trailing
// non-word characters (token spans never include boundary punctuation).
inline std::string matching_key(std::string_view phrase) {
  std::string key = normalize(phrase);
  std::size_t b = 0;
  std::size_t e = key.size();
  while (b < e && !is_word_char(static_cast<unsigned char>(key[b]))) ++b;
  while (e > b && !is_word_char(static_cast<unsigned char>(key[e - 1]))) --e;
  return key.substr(b, e - b);
}

// Number of occurrences of `phrase` in `target`, where an occurrence spans
// whole tokens: the normalized slice from token i to token i+k-1 equals the
// matching key of the phrase.
inline std::size_t count_token_phrase(std::string_view target, std::string_view phrase) {
  const std::string needle = matching_key(phrase);
  if (needle.empty()) return 0;
  const std::size_t needle_tokens = tokenize(needle).size();
  if (needle_tokens == 0) return 0;
  const std::vector<Token> tokens = tokenize(target);
  if (tokens.size() < needle_tokens) return 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i + needle_tokens <= tokens.size(); ++i) {
    const std::size_t start = tokens[i].start;
    const std::size_t end = tokens[i + needle_tokens - 1].end;
    if (normalize(target.substr(start, end - start)) == needle) ++count;
  }
  return count;
}

inline bool contains_token_phrase(std::string_view target, std::string_view phrase) {
  return count_token_phrase(target, phrase) > 0;
}

// "a" vs "an" chosen by the likely sound of the first word. Covers the usual
// written-English exceptions (unit, one, hour, ...); anything beyond that is
// out of reach without a pronunciation lexicon.
inline std::string_view indefinite_article(std::string_view word) {
  std::string folded;
  for (char c : word) folded.push_back(fold_char(c));
  auto starts_with = [&](std::string_view p) { return folded.rfind(p, 0) == 0; };
  if (starts_with("hour") || starts_with("honest") || starts_with("honor") ||
      starts_with("honour") || starts_with("heir")) {
    return "an";
  }
  if (starts_with("uni") || starts_with("use") || starts_with("user") ||
      starts_with("one") || starts_with("once") || starts_with("eu")) {
    return "a";
  }
  if (!folded.empty() && (folded[0] == 'a' || folded[0] == 'e' || folded[0] == 'i' ||
                          folded[0] == 'o' || folded[0] == 'u')) {
    return "an";
  }
  return "a";
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space_char(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_space_char(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace salient::text
