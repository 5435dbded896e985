#include "mdvg/utf8.hpp"

namespace mdvg::utf8 {
namespace {

constexpr char32_t kReplacement = 0xFFFD;

// Returns the sequence length announced by a lead byte, 0 if it cannot lead.
int sequence_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 0;
}

// Decodes one scalar at `pos`; returns the number of bytes consumed.
std::size_t decode_one(std::string_view bytes, std::size_t pos, char32_t& out) {
  const auto lead = static_cast<unsigned char>(bytes[pos]);
  const int n = sequence_length(lead);
  if (n == 0 || pos + n > bytes.size()) {
    out = kReplacement;
    return 1;
  }
  if (n == 1) {
    out = lead;
    return 1;
  }
  char32_t cp = lead & (0x7F >> n);
  for (int i = 1; i < n; ++i) {
    const auto cont = static_cast<unsigned char>(bytes[pos + i]);
    if ((cont & 0xC0) != 0x80) {
      out = kReplacement;
      return 1;
    }
    cp = (cp << 6) | (cont & 0x3F);
  }
  static constexpr char32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
  if (cp < kMin[n] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    out = kReplacement;
    return 1;
  }
  out = cp;
  return n;
}

}  // namespace

std::u32string decode(std::string_view bytes) {
  std::u32string out;
  out.reserve(bytes.size());
  for (std::size_t pos = 0; pos < bytes.size();) {
    char32_t c;
    pos += decode_one(bytes, pos, c);
    out.push_back(c);
  }
  return out;
}

void append(std::string& out, char32_t c) {
  if (c < 0x80) {
    out.push_back(static_cast<char>(c));
  } else if (c < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (c >> 6)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else if (c < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (c >> 12)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (c >> 18)));
    out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  }
}

std::string encode(std::u32string_view scalars) {
  std::string out;
  out.reserve(scalars.size());
  for (char32_t c : scalars) append(out, c);
  return out;
}

std::size_t length(std::string_view bytes) {
  std::size_t n = 0;
  for (std::size_t pos = 0; pos < bytes.size(); ++n) {
    char32_t c;
    pos += decode_one(bytes, pos, c);
  }
  return n;
}

std::size_t byte_offset(std::string_view bytes, std::size_t char_index) {
  std::size_t pos = 0;
  for (std::size_t i = 0; i < char_index && pos < bytes.size(); ++i) {
    char32_t c;
    pos += decode_one(bytes, pos, c);
  }
  return pos;
}

std::string substr(std::string_view bytes, std::size_t start, std::size_t end) {
  const std::size_t b = byte_offset(bytes, start);
  const std::size_t e = byte_offset(bytes, end);
  return std::string(bytes.substr(b, e - b));
}

std::size_t complete_prefix(std::string_view bytes) {
  // Only a truncated trailing sequence is incomplete; look back at most 3 bytes.
  const std::size_t n = bytes.size();
  for (std::size_t back = 1; back <= 3 && back <= n; ++back) {
    const auto b = static_cast<unsigned char>(bytes[n - back]);
    if ((b & 0xC0) == 0x80) continue;
    const int need = sequence_length(b);
    if (need > static_cast<int>(back)) return n - back;
    return n;
  }
  return n;
}

bool is_space(char32_t c) {
  switch (c) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

}  // namespace mdvg::utf8
