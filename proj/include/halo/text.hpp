#pragma once

// Small UTF-8 helpers shared by scoring, filters and analysis.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace halo::text {

// Decodes UTF-8 into code points. Invalid sequences decode to U+FFFD and set
// *valid (when given) to false.
std::u32string decode_utf8(std::string_view s, bool* valid = nullptr);
std::string encode_utf8(std::u32string_view s);
void append_utf8(std::string& out, char32_t cp);

bool is_valid_utf8(std::string_view s);
std::size_t codepoint_length(std::string_view s);

// Unicode White_Space property.
bool is_space(char32_t cp);
bool contains_space(std::string_view s);
std::string_view trim(std::string_view s);

// Splits on runs of Unicode whitespace, dropping empty pieces.
std::vector<std::string> split_whitespace(std::string_view s);

inline constexpr std::string_view kNewlineToken = "<NEWLINE>";

// "\r\n" and "\n" become kNewlineToken.
std::string encode_newlines(std::string_view s);
std::string decode_newlines(std::string_view s);

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view s,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace halo::text
