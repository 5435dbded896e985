#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace mdvg::utf8 {

// Decodes UTF-8 into Unicode scalars. Invalid sequences become U+FFFD, one
// per offending byte, so offsets stay well-defined on dirty input.
std::u32string decode(std::string_view bytes);

std::string encode(std::u32string_view scalars);
void append(std::string& out, char32_t scalar);

// Number of scalars in `bytes` (same counting rule as decode()).
std::size_t length(std::string_view bytes);

// Byte offset of the scalar at `char_index`; length(bytes) maps to bytes.size().
std::size_t byte_offset(std::string_view bytes, std::size_t char_index);

// Scalar-indexed substring [start, end).
std::string substr(std::string_view bytes, std::size_t start, std::size_t end);

// Length in bytes of the longest prefix of `bytes` made of complete scalars.
std::size_t complete_prefix(std::string_view bytes);

// Unicode White_Space property.
bool is_space(char32_t c);

}  // namespace mdvg::utf8
