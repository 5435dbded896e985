#include "mdvg/iob.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mdvg/error.hpp"
#include "mdvg/utf8.hpp"

namespace mdvg {

std::string_view to_string(IobLabel label) {
  switch (label) {
    case IobLabel::B: return "B";
    case IobLabel::I: return "I";
    case IobLabel::O: return "O";
    case IobLabel::Ignore: return "IGNORE";
  }
  return "O";
}

IobLabel parse_iob_label(std::string_view s) {
  if (s == "B") return IobLabel::B;
  if (s == "I") return IobLabel::I;
  if (s == "O") return IobLabel::O;
  if (s == "IGNORE") return IobLabel::Ignore;
  throw Error(ErrorCode::MalformedFile, "unknown IOB label \"" + std::string(s) + "\"");
}

TokenizationView whitespace_view(std::string_view text) {
  const std::u32string chars = utf8::decode(text);
  TokenizationView view;
  for (std::size_t i = 0; i < chars.size();) {
    if (utf8::is_space(chars[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < chars.size() && !utf8::is_space(chars[j])) ++j;
    view.tokens.push_back({utf8::encode(std::u32string_view(chars).substr(i, j - i)), i, j});
    i = j;
  }
  return view;
}

TokenizationView view_from_offsets(std::string_view text,
                                   const std::vector<std::pair<std::size_t, std::size_t>>& offsets) {
  const std::u32string chars = utf8::decode(text);
  TokenizationView view;
  for (const auto& [start, end] : offsets) {
    if (start >= end || end > chars.size())
      throw Error(ErrorCode::ViewMismatch, "token [" + std::to_string(start) + "," + std::to_string(end) +
                                               ") outside text of length " + std::to_string(chars.size()));
    view.tokens.push_back({utf8::encode(std::u32string_view(chars).substr(start, end - start)), start, end});
  }
  check_view(view, text);
  return view;
}

void check_view(const TokenizationView& view, std::string_view text) {
  const std::size_t n = utf8::length(text);
  std::size_t prev_end = 0;
  for (std::size_t k = 0; k < view.tokens.size(); ++k) {
    const auto& t = view.tokens[k];
    const std::string where = "token " + std::to_string(k) + " [" + std::to_string(t.start) + "," +
                              std::to_string(t.end) + ")";
    if (t.start >= t.end || t.end > n) throw Error(ErrorCode::ViewMismatch, where + " out of bounds");
    if (k > 0 && t.start < prev_end) throw Error(ErrorCode::ViewMismatch, where + " overlaps its predecessor");
    if (utf8::substr(text, t.start, t.end) != t.text)
      throw Error(ErrorCode::ViewMismatch, where + " text does not match the utterance");
    prev_end = t.end;
  }
}

namespace {

bool in_span(const ViewToken& t, const MentionSpan& s, OverlapPolicy policy) {
  if (policy == OverlapPolicy::FullContainment) return s.start <= t.start && t.end <= s.end;
  return t.start < s.end && s.start < t.end;
}

}  // namespace

std::vector<IobLabel> to_iob(const Utterance& utterance, const TokenizationView& view, OverlapPolicy policy) {
  check_view(view, utterance.text);
  std::vector<IobLabel> labels(view.tokens.size(), IobLabel::O);
  for (const auto& span : utterance.mentions) {
    bool first = true;
    for (std::size_t k = 0; k < view.tokens.size(); ++k) {
      if (!in_span(view.tokens[k], span, policy)) continue;
      // A token already opening another span keeps its B.
      if (first) labels[k] = IobLabel::B;
      else if (labels[k] == IobLabel::O) labels[k] = IobLabel::I;
      first = false;
    }
  }
  return labels;
}

IobDecoding from_iob(const std::vector<IobLabel>& labels, const TokenizationView& view) {
  if (labels.size() != view.tokens.size())
    throw Error(ErrorCode::ViewMismatch, std::to_string(labels.size()) + " labels for " +
                                             std::to_string(view.tokens.size()) + " tokens");
  IobDecoding out;
  bool open = false;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const auto& t = view.tokens[k];
    switch (labels[k]) {
      case IobLabel::B:
        out.spans.push_back({t.start, t.end});
        open = true;
        break;
      case IobLabel::I:
        if (open) {
          out.spans.back().end = t.end;
        } else {
          ++out.repairs;
          out.spans.push_back({t.start, t.end});
          open = true;
        }
        break;
      case IobLabel::O:
      case IobLabel::Ignore:
        open = false;
        break;
    }
  }
  return out;
}

LabeledSequence build_labeled_window(const Dialogue& dialogue, int index, WindowSpec spec,
                                     const std::vector<TokenizationView>& views, OverlapPolicy policy) {
  if (index < 1 || static_cast<std::size_t>(index) > dialogue.utterances.size())
    throw Error(ErrorCode::IndexOutOfRange, "utterance " + std::to_string(index) + " not in dialogue '" +
                                                dialogue.dialogue_id + "'");
  if (views.size() < static_cast<std::size_t>(index))
    throw Error(ErrorCode::ViewMismatch, "no view for utterance " + std::to_string(index));
  if (spec.w < 0) throw Error(ErrorCode::IndexOutOfRange, "window must be non-negative");
  const int h = std::min(spec.w, index - 1);
  LabeledSequence seq;
  for (int i = index - h; i <= index; ++i) {
    const Utterance& u = dialogue.utterances[i - 1];
    const TokenizationView& view = views[i - 1];
    check_view(view, u.text);
    if (i == index) {
      seq.target_begin = seq.tokens.size();
      const auto labels = to_iob(u, view, policy);
      seq.labels.insert(seq.labels.end(), labels.begin(), labels.end());
    } else {
      seq.labels.insert(seq.labels.end(), view.tokens.size(), IobLabel::Ignore);
    }
    seq.tokens.insert(seq.tokens.end(), view.tokens.begin(), view.tokens.end());
    seq.utterance_of_token.insert(seq.utterance_of_token.end(), view.tokens.size(), i);
  }
  seq.target_end = seq.tokens.size();
  return seq;
}

std::string format_conll_block(const std::string& dialogue_id, int index, const LabeledSequence& seq) {
  std::string out = "# dialogue_id=" + dialogue_id + " index=" + std::to_string(index) +
                    " target_start=" + std::to_string(seq.target_begin) + "\n";
  for (std::size_t k = 0; k < seq.tokens.size(); ++k) {
    const auto& t = seq.tokens[k];
    out += t.text + "\t" + std::to_string(t.start) + "\t" + std::to_string(t.end) + "\t" +
           std::string(to_string(seq.labels[k])) + "\n";
  }
  out += "\n";
  return out;
}

namespace {

struct BlockHeader {
  UtteranceKey key;
  std::size_t target_start = 0;
};

BlockHeader parse_header(const std::string& line, std::size_t line_no) {
  auto bad = [&](const std::string& msg) {
    return Error(ErrorCode::MalformedFile, "IOB line " + std::to_string(line_no) + ": " + msg);
  };
  const std::string id_tag = "# dialogue_id=";
  const auto index_at = line.rfind(" index=");
  const auto target_at = line.rfind(" target_start=");
  if (line.rfind(id_tag, 0) != 0 || index_at == std::string::npos || target_at == std::string::npos ||
      target_at < index_at)
    throw bad("expected block header");
  BlockHeader h;
  h.key.dialogue_id = line.substr(id_tag.size(), index_at - id_tag.size());
  try {
    h.key.index = std::stoi(line.substr(index_at + 7, target_at - index_at - 7));
    h.target_start = std::stoul(line.substr(target_at + 14));
  } catch (const std::exception&) {
    throw bad("bad number in header");
  }
  return h;
}

}  // namespace

IobImport import_conll(std::string_view text, const Corpus& corpus) {
  IobImport out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  std::optional<BlockHeader> header;
  std::vector<std::pair<ViewToken, IobLabel>> rows;

  auto flush = [&] {
    if (!header) return;
    const Dialogue* d = corpus.find(header->key.dialogue_id);
    if (d == nullptr || header->key.index < 1 || static_cast<std::size_t>(header->key.index) > d->utterances.size())
      throw Error(ErrorCode::KeyMismatch, "IOB block for unknown utterance (" + header->key.dialogue_id + ", " +
                                              std::to_string(header->key.index) + ")");
    if (header->target_start > rows.size()) throw Error(ErrorCode::ViewMismatch, "target_start past end of block");
    TokenizationView view;
    std::vector<IobLabel> labels;
    for (std::size_t k = header->target_start; k < rows.size(); ++k) {
      view.tokens.push_back(rows[k].first);
      labels.push_back(rows[k].second);
    }
    check_view(view, d->utterances[header->key.index - 1].text);
    auto decoded = from_iob(labels, view);
    out.repairs += decoded.repairs;
    if (!out.predictions.emplace(header->key, UtterancePrediction{std::move(decoded.spans), std::nullopt}).second)
      throw Error(ErrorCode::KeyMismatch, "duplicate IOB block for (" + header->key.dialogue_id + ", " +
                                              std::to_string(header->key.index) + ")");
    header.reset();
    rows.clear();
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    if (line[0] == '#') {
      flush();
      header = parse_header(line, line_no);
      continue;
    }
    if (!header) throw Error(ErrorCode::MalformedFile, "IOB line " + std::to_string(line_no) + ": token before header");
    std::vector<std::string> cols;
    std::size_t from = 0;
    for (std::size_t tab; (tab = line.find('\t', from)) != std::string::npos; from = tab + 1)
      cols.push_back(line.substr(from, tab - from));
    cols.push_back(line.substr(from));
    if (cols.size() != 4)
      throw Error(ErrorCode::MalformedFile, "IOB line " + std::to_string(line_no) + ": expected 4 columns");
    ViewToken t;
    t.text = cols[0];
    try {
      t.start = std::stoul(cols[1]);
      t.end = std::stoul(cols[2]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::MalformedFile, "IOB line " + std::to_string(line_no) + ": bad offsets");
    }
    rows.emplace_back(std::move(t), parse_iob_label(cols[3]));
  }
  flush();
  return out;
}

std::map<UtteranceKey, TokenizationView> load_views(const std::filesystem::path& path, const Corpus& corpus) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::map<UtteranceKey, TokenizationView> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    UtteranceKey key;
    std::vector<std::pair<std::size_t, std::size_t>> offsets;
    try {
      const auto j = nlohmann::json::parse(line);
      key.dialogue_id = j.at("dialogue_id").get<std::string>();
      key.index = j.at("index").get<int>();
      for (const auto& t : j.at("tokens")) offsets.emplace_back(t.at(0).get<std::size_t>(), t.at(1).get<std::size_t>());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedFile, "views line " + std::to_string(line_no) + ": " + e.what());
    }
    const Dialogue* d = corpus.find(key.dialogue_id);
    if (d == nullptr || key.index < 1 || static_cast<std::size_t>(key.index) > d->utterances.size())
      throw Error(ErrorCode::KeyMismatch, "views line " + std::to_string(line_no) + ": unknown utterance");
    out[key] = view_from_offsets(d->utterances[key.index - 1].text, offsets);
  }
  return out;
}

}  // namespace mdvg
