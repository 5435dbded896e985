#include "mdvg/np_baseline.hpp"

#include <array>
#include <cctype>
#include <cstring>
#include <sstream>
#include <utility>

#include "json.hpp"
#include "mdvg/error.hpp"
#include "mdvg/utf8.hpp"

namespace mdvg {
namespace {

struct Lexer {
  std::string_view src;
  std::size_t pos = 0;

  void skip() {
    while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
  }
  bool at_end() {
    skip();
    return pos >= src.size();
  }
  char peek() {
    skip();
    return pos < src.size() ? src[pos] : '\0';
  }
  std::string atom() {
    skip();
    const std::size_t from = pos;
    while (pos < src.size() && src[pos] != '(' && src[pos] != ')' &&
           !std::isspace(static_cast<unsigned char>(src[pos])))
      ++pos;
    return std::string(src.substr(from, pos - from));
  }
};

[[noreturn]] void unbalanced(const std::string& msg) { throw Error(ErrorCode::UnbalancedBrackets, msg); }

ParseTree read_node(Lexer& lx) {
  if (lx.peek() != '(') unbalanced("expected '(' at offset " + std::to_string(lx.pos));
  ++lx.pos;
  ParseTree node;
  if (lx.peek() != '(' && lx.peek() != ')') node.label = lx.atom();
  while (true) {
    if (lx.at_end()) unbalanced("missing ')' at end of input");
    const char c = lx.peek();
    if (c == ')') {
      ++lx.pos;
      return node;
    }
    if (c == '(') {
      if (node.word) unbalanced("node '" + node.label + "' mixes a word and subtrees");
      node.children.push_back(read_node(lx));
    } else {
      if (node.word || !node.children.empty()) unbalanced("unexpected token in node '" + node.label + "'");
      node.word = lx.atom();
    }
  }
}

// Candidate surface forms of a treebank token, raw form first.
std::vector<std::string> surface_forms(const std::string& word) {
  static const std::array<std::pair<const char*, const char*>, 10> kEscapes = {{
      {"-LRB-", "("}, {"-RRB-", ")"}, {"-LSB-", "["}, {"-RSB-", "]"}, {"-LCB-", "{"},
      {"-RCB-", "}"}, {"``", "\""}, {"''", "\""}, {"\\/", "/"}, {"\\*", "*"},
  }};
  std::vector<std::string> forms{word};
  for (const auto& [escaped, raw] : kEscapes) {
    std::string s = word;
    bool changed = false;
    for (std::size_t at; (at = s.find(escaped)) != std::string::npos; changed = true) s.replace(at, std::strlen(escaped), raw);
    if (changed) forms.push_back(s);
  }
  if (word == "`") forms.push_back("'");
  return forms;
}

void align(ParseTree& node, const std::u32string& text, std::size_t& cursor) {
  if (node.word) {
    while (cursor < text.size() && utf8::is_space(text[cursor])) ++cursor;
    for (const auto& form : surface_forms(*node.word)) {
      const std::u32string f = utf8::decode(form);
      if (!f.empty() && text.compare(cursor, f.size(), f) == 0) {
        node.start = cursor;
        node.end = cursor + f.size();
        cursor = node.end;
        return;
      }
    }
    throw Error(ErrorCode::LeafAlignmentFailure,
                "leaf \"" + *node.word + "\" does not match the utterance at character " + std::to_string(cursor));
  }
  bool any = false;
  for (auto& child : node.children) {
    align(child, text, cursor);
    if (child.end > child.start) {
      if (!any) node.start = child.start;
      node.end = child.end;
      any = true;
    }
  }
  if (!any) node.start = node.end = cursor;
}

bool is_np(const std::string& label) { return label == "NP" || label.rfind("NP-", 0) == 0 || label.rfind("NP=", 0) == 0; }

void collect_nps(const ParseTree& node, std::vector<MentionSpan>& out) {
  if (is_np(node.label) && node.end > node.start) {
    out.push_back({node.start, node.end});
    return;
  }
  for (const auto& child : node.children) collect_nps(child, out);
}

}  // namespace

ParseTree parse_ptb(std::string_view bracketed, std::string_view utterance) {
  Lexer lx{bracketed};
  ParseTree tree = read_node(lx);
  if (!lx.at_end()) unbalanced("trailing input after the tree at offset " + std::to_string(lx.pos));
  const std::u32string text = utf8::decode(utterance);
  std::size_t cursor = 0;
  align(tree, text, cursor);
  while (cursor < text.size() && utf8::is_space(text[cursor])) ++cursor;
  if (cursor != text.size())
    throw Error(ErrorCode::LeafAlignmentFailure, "leaves end at character " + std::to_string(cursor) +
                                                     " but the utterance has " + std::to_string(text.size()));
  return tree;
}

std::vector<MentionSpan> extract_maximal_nps(const ParseTree& tree) {
  std::vector<MentionSpan> out;
  collect_nps(tree, out);
  return out;
}

const std::set<std::string>& default_pronoun_stoplist() {
  static const std::set<std::string> kStoplist = {"i", "you", "me", "we", "us", "my", "your", "our", "mine", "yours", "ours"};
  return kStoplist;
}

std::vector<MentionSpan> filter_pronouns(const std::vector<MentionSpan>& spans, std::string_view utterance,
                                         const std::set<std::string>& stoplist) {
  const std::u32string text = utf8::decode(utterance);
  std::vector<MentionSpan> out;
  for (const auto& s : spans) {
    std::size_t from = s.start, to = std::min(s.end, text.size());
    while (from < to && utf8::is_space(text[from])) ++from;
    while (to > from && utf8::is_space(text[to - 1])) --to;
    std::u32string folded = text.substr(from, to - from);
    for (auto& c : folded)
      if (c < 0x80) c = static_cast<char32_t>(std::tolower(static_cast<int>(c)));
    if (!stoplist.contains(utf8::encode(folded))) out.push_back(s);
  }
  return out;
}

NpBaselineResult run_np_baseline(std::string_view trees_jsonl, const Corpus& corpus,
                                 const std::set<std::string>& stoplist) {
  NpBaselineResult result;
  std::istringstream in{std::string(trees_jsonl)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    UtteranceKey key;
    std::string tree;
    try {
      const auto j = nlohmann::json::parse(line);
      key.dialogue_id = j.at("dialogue_id").get<std::string>();
      key.index = j.at("index").get<int>();
      tree = j.at("tree").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedFile, "trees line " + std::to_string(line_no) + ": " + e.what());
    }
    const Dialogue* d = corpus.find(key.dialogue_id);
    if (d == nullptr || key.index < 1 || static_cast<std::size_t>(key.index) > d->utterances.size())
      throw Error(ErrorCode::KeyMismatch, "trees line " + std::to_string(line_no) + ": unknown utterance");
    const std::string& text = d->utterances[key.index - 1].text;
    UtterancePrediction pred;
    try {
      pred.spans = filter_pronouns(extract_maximal_nps(parse_ptb(tree, text)), text, stoplist);
    } catch (const Error& e) {
      pred.parse_error = e.what();
      ++result.failed_trees;
    }
    if (!result.predictions.emplace(key, std::move(pred)).second)
      throw Error(ErrorCode::KeyMismatch, "trees line " + std::to_string(line_no) + ": duplicate utterance");
  }
  return result;
}

}  // namespace mdvg
