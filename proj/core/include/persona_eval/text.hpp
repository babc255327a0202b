#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace persona_eval::text {

/// Strips leading and trailing ASCII whitespace.
std::string_view trim(std::string_view s);

bool is_blank(std::string_view s);

/// Decodes UTF-8 into code points. Invalid bytes decode as U+FFFD so the
/// function is total.
std::u32string decode_utf8(std::string_view s);

std::string encode_utf8(std::u32string_view cps);

/// Lowercases ASCII and Cyrillic letters; other code points pass through.
char32_t to_lower(char32_t cp);
std::string to_lower(std::string_view s);

bool is_space(char32_t cp);

/// ASCII punctuation plus the Unicode dashes, quotes, guillemets and ellipsis
/// that show up in translated dialogue.
bool is_punct(char32_t cp);

/// Lowercased word tokens; whitespace and punctuation are separators.
std::vector<std::string> tokenize(std::string_view s);

/// 64-bit FNV-1a over raw bytes.
constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace persona_eval::text
