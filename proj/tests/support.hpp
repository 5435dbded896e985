#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "mdvg/corpus.hpp"
#include "mdvg/utf8.hpp"

namespace support {

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(MDVG_FIXTURES) / name; }

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& data) {
  std::ofstream out(p, std::ios::binary);
  out << data;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("mdvg-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::filesystem::path operator/(const std::string& s) const { return path / s; }
};

// Random text drawn from a small alphabet heavy in whitespace and multibyte scalars.
inline std::string random_text(std::mt19937_64& rng, std::size_t max_len) {
  static const std::vector<std::string> alphabet = {"a", "b", "c", " ", " ", "\t", "é", "🐶", ",", "x", " ", "<", ">"};
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::uniform_int_distribution<int> rare(0, 3);
  std::string s;
  const std::size_t n = len(rng);
  for (std::size_t i = 0; i < n; ++i) {
    std::string c = alphabet[pick(rng)];
    if ((c == "<" || c == ">") && rare(rng) != 0) c = "e";
    // never form a marker by accident
    if ((c == ">" && !s.empty() && s.back() == '>') || (c == "<" && !s.empty() && s.back() == '<')) c = "a";
    s += c;
  }
  return s;
}

// Random sorted, disjoint, nonempty spans over [0, n).
inline std::vector<mdvg::MentionSpan> random_spans(std::mt19937_64& rng, std::size_t n, std::size_t max_spans = 6) {
  std::vector<mdvg::MentionSpan> spans;
  std::size_t pos = 0;
  std::uniform_int_distribution<int> coin(0, 2);
  while (pos < n && spans.size() < max_spans) {
    std::uniform_int_distribution<std::size_t> gap(0, std::min<std::size_t>(3, n - pos - 1));
    const std::size_t s = pos + (coin(rng) == 0 ? 0 : gap(rng));
    if (s >= n) break;
    std::uniform_int_distribution<std::size_t> len(1, std::min<std::size_t>(5, n - s));
    const std::size_t e = s + len(rng);
    spans.push_back({s, e});
    pos = e;
    if (coin(rng) == 0) break;
  }
  return spans;
}

// Drops leading/trailing whitespace from each span; spans that become empty go.
inline std::vector<mdvg::MentionSpan> trimmed(const std::vector<mdvg::MentionSpan>& spans, const std::string& text) {
  const std::u32string t = mdvg::utf8::decode(text);
  std::vector<mdvg::MentionSpan> out;
  for (auto s : spans) {
    while (s.start < s.end && mdvg::utf8::is_space(t[s.start])) ++s.start;
    while (s.end > s.start && mdvg::utf8::is_space(t[s.end - 1])) --s.end;
    if (s.start < s.end) out.push_back(s);
  }
  return out;
}

inline bool is_trimmed(const std::vector<mdvg::MentionSpan>& spans, const std::string& text) {
  return trimmed(spans, text) == spans;
}

}  // namespace support
