#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace arforge::util {

/// True when `text` is well-formed UTF-8 (no overlongs, surrogates or
/// code points past U+10FFFF).
bool valid_utf8(std::string_view text);

/// Splits well-formed UTF-8 into code points. Throws std::invalid_argument on
/// malformed input.
std::u32string decode_utf8(std::string_view text);

std::string encode_utf8(std::u32string_view text);

/// Byte strings of each code point, in order.
std::vector<std::string> utf8_characters(std::string_view text);

/// Simple (1:1) lowercase mapping for Latin, Greek, Cyrillic, Armenian and
/// fullwidth Latin letters; every other code point maps to itself.
char32_t simple_lowercase(char32_t c);

std::string lowercase_utf8(std::string_view text);

/// Splits on runs of ASCII whitespace.
std::vector<std::string> split_whitespace(std::string_view text);

/// `text` without trailing ASCII whitespace.
std::string_view trim_right(std::string_view text);

} // namespace arforge::util
