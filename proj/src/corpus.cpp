#include "mdvg/corpus.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mdvg/error.hpp"
#include "mdvg/utf8.hpp"

namespace mdvg {

using nlohmann::json;
using nlohmann::ordered_json;

char speaker_char(Speaker s) { return s == Speaker::A ? 'A' : 'B'; }

std::optional<Speaker> parse_speaker(std::string_view s) {
  if (s == "A") return Speaker::A;
  if (s == "B") return Speaker::B;
  return std::nullopt;
}

std::size_t Corpus::utterance_count() const {
  std::size_t n = 0;
  for (const auto& d : dialogues) n += d.utterances.size();
  return n;
}

const Dialogue* Corpus::find(std::string_view dialogue_id) const {
  for (const auto& d : dialogues)
    if (d.dialogue_id == dialogue_id) return &d;
  return nullptr;
}

std::string_view to_string(ViolationCode code) {
  switch (code) {
    case ViolationCode::DuplicateDialogueId: return "DuplicateDialogueId";
    case ViolationCode::EmptyDialogue: return "EmptyDialogue";
    case ViolationCode::NonContiguousIndex: return "NonContiguousIndex";
    case ViolationCode::SpanOutOfBounds: return "SpanOutOfBounds";
    case ViolationCode::EmptySpan: return "EmptySpan";
    case ViolationCode::UnsortedMentions: return "UnsortedMentions";
    case ViolationCode::OverlapViolation: return "OverlapViolation";
    case ViolationCode::NestingViolation: return "NestingViolation";
  }
  return "Unknown";
}

std::string Violation::describe() const {
  std::ostringstream os;
  os << to_string(code) << " at dialogue '" << dialogue_id << "'";
  if (utterance_index) os << ", utterance " << *utterance_index;
  if (span_index) os << ", span " << *span_index;
  if (!message.empty()) os << ": " << message;
  return os.str();
}

std::vector<Violation> validate_spans(const std::vector<MentionSpan>& spans, std::size_t text_length,
                                      const std::string& dialogue_id, int utterance_index) {
  std::vector<Violation> out;
  auto report = [&](ViolationCode code, std::size_t span, std::string msg) {
    out.push_back({code, dialogue_id, utterance_index, span, std::move(msg)});
  };
  for (std::size_t k = 0; k < spans.size(); ++k) {
    const auto& s = spans[k];
    const std::string where = "[" + std::to_string(s.start) + "," + std::to_string(s.end) + ")";
    if (s.start >= s.end)
      report(ViolationCode::EmptySpan, k, where);
    else if (s.end > text_length)
      report(ViolationCode::SpanOutOfBounds, k, where + " exceeds text length " + std::to_string(text_length));
    if (k > 0 && spans[k - 1].start > s.start)
      report(ViolationCode::UnsortedMentions, k, where + " starts before its predecessor");
  }
  for (std::size_t i = 0; i < spans.size(); ++i) {
    for (std::size_t j = i + 1; j < spans.size(); ++j) {
      const auto& a = spans[i];
      const auto& b = spans[j];
      if (a.start >= a.end || b.start >= b.end) continue;
      if (a.end <= b.start || b.end <= a.start) continue;
      const bool nested = (a.start <= b.start && b.end <= a.end) || (b.start <= a.start && a.end <= b.end);
      const std::string msg = "[" + std::to_string(a.start) + "," + std::to_string(a.end) + ") and [" +
                              std::to_string(b.start) + "," + std::to_string(b.end) + ")";
      report(nested ? ViolationCode::NestingViolation : ViolationCode::OverlapViolation, j, msg);
    }
  }
  return out;
}

std::vector<Violation> validate(const Corpus& corpus) {
  std::vector<Violation> out;
  std::set<std::string> seen;
  for (const auto& d : corpus.dialogues) {
    if (!seen.insert(d.dialogue_id).second)
      out.push_back({ViolationCode::DuplicateDialogueId, d.dialogue_id, std::nullopt, std::nullopt, ""});
    if (d.utterances.empty())
      out.push_back({ViolationCode::EmptyDialogue, d.dialogue_id, std::nullopt, std::nullopt, ""});
    for (std::size_t i = 0; i < d.utterances.size(); ++i) {
      const auto& u = d.utterances[i];
      if (u.index != static_cast<int>(i) + 1)
        out.push_back({ViolationCode::NonContiguousIndex, d.dialogue_id, u.index, std::nullopt,
                       "expected index " + std::to_string(i + 1)});
      auto spans = validate_spans(u.mentions, utf8::length(u.text), d.dialogue_id, u.index);
      out.insert(out.end(), spans.begin(), spans.end());
    }
  }
  return out;
}

namespace {

[[noreturn]] void malformed(const std::string& msg) { throw Error(ErrorCode::MalformedFile, msg); }

const json& field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) malformed(where + ": missing field '" + key + "'");
  return *it;
}

std::string string_field(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_string()) malformed(where + ": field '" + key + "' must be a string");
  return v.get<std::string>();
}

long long int_field(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_number_integer()) malformed(where + ": field '" + key + "' must be an integer");
  return v.get<long long>();
}

std::size_t offset_field(const json& obj, const char* key, const std::string& where) {
  const long long v = int_field(obj, key, where);
  if (v < 0) malformed(where + ": field '" + key + "' must be non-negative");
  return static_cast<std::size_t>(v);
}

Utterance parse_utterance(const json& j, const std::string& where) {
  if (!j.is_object()) malformed(where + ": utterance must be an object");
  Utterance u;
  u.index = static_cast<int>(int_field(j, "index", where));
  const std::string speaker = string_field(j, "speaker", where);
  auto sp = parse_speaker(speaker);
  if (!sp) malformed(where + ": speaker must be \"A\" or \"B\", got \"" + speaker + "\"");
  u.speaker = *sp;
  u.text = string_field(j, "text", where);
  const json& mentions = field(j, "mentions", where);
  if (!mentions.is_array()) malformed(where + ": mentions must be an array");
  for (const auto& m : mentions) {
    if (!m.is_object()) malformed(where + ": mention must be an object");
    u.mentions.push_back({offset_field(m, "start", where), offset_field(m, "end", where)});
  }
  return u;
}

Dialogue parse_dialogue(const json& j, std::size_t pos) {
  std::string where = "dialogues[" + std::to_string(pos) + "]";
  if (!j.is_object()) malformed(where + ": dialogue must be an object");
  Dialogue d;
  d.dialogue_id = string_field(j, "dialogue_id", where);
  where += " ('" + d.dialogue_id + "')";
  d.image_set_id = string_field(j, "image_set_id", where);
  if (auto it = j.find("category"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) malformed(where + ": category must be a string or null");
    d.category = it->get<std::string>();
  }
  const json& utts = field(j, "utterances", where);
  if (!utts.is_array()) malformed(where + ": utterances must be an array");
  for (std::size_t i = 0; i < utts.size(); ++i)
    d.utterances.push_back(parse_utterance(utts[i], where + ".utterances[" + std::to_string(i) + "]"));
  return d;
}

}  // namespace

Corpus parse_corpus(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    malformed(e.what());
  }
  if (!root.is_object()) malformed("top level must be an object");
  Corpus corpus;
  corpus.dataset_id = string_field(root, "dataset_id", "corpus");
  const json& dialogues = field(root, "dialogues", "corpus");
  if (!dialogues.is_array()) malformed("corpus: dialogues must be an array");
  for (std::size_t i = 0; i < dialogues.size(); ++i) corpus.dialogues.push_back(parse_dialogue(dialogues[i], i));

  if (auto violations = validate(corpus); !violations.empty()) {
    std::string msg = violations.front().describe();
    if (violations.size() > 1) msg += " (+" + std::to_string(violations.size() - 1) + " more)";
    throw Error(ErrorCode::InvariantViolation, msg);
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str());
}

std::string serialize_corpus(const Corpus& corpus) {
  ordered_json root;
  root["dataset_id"] = corpus.dataset_id;
  root["dialogues"] = ordered_json::array();
  for (const auto& d : corpus.dialogues) {
    ordered_json jd;
    jd["dialogue_id"] = d.dialogue_id;
    jd["image_set_id"] = d.image_set_id;
    jd["category"] = d.category ? ordered_json(*d.category) : ordered_json(nullptr);
    jd["utterances"] = ordered_json::array();
    for (const auto& u : d.utterances) {
      ordered_json ju;
      ju["index"] = u.index;
      ju["speaker"] = std::string(1, speaker_char(u.speaker));
      ju["text"] = u.text;
      ju["mentions"] = ordered_json::array();
      for (const auto& m : u.mentions) ju["mentions"].push_back({{"start", m.start}, {"end", m.end}});
      jd["utterances"].push_back(std::move(ju));
    }
    root["dialogues"].push_back(std::move(jd));
  }
  return root.dump(2) + "\n";
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << serialize_corpus(corpus);
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

std::size_t count_words(std::u32string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (char32_t c : text) {
    const bool space = utf8::is_space(c);
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

namespace {

struct Moments {
  std::vector<double> values;

  void add(double v) { values.push_back(v); }
  double mean() const {
    if (values.empty()) return 0;
    double s = 0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
  }
  // population standard deviation
  double sd() const {
    if (values.empty()) return 0;
    const double m = mean();
    double s = 0;
    for (double v : values) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(values.size()));
  }
};

double percent(std::size_t part, std::size_t whole) {
  return whole == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(whole);
}

}  // namespace

StatsReport compute_stats(const Corpus& corpus) {
  StatsReport r;
  Moments chars_msg, words_msg, chars_men, words_men;
  r.n_dialogues = corpus.dialogues.size();
  for (const auto& d : corpus.dialogues) {
    for (const auto& u : d.utterances) {
      const std::u32string text = utf8::decode(u.text);
      const std::size_t words = count_words(text);
      ++r.n_messages;
      r.n_chars += text.size();
      r.n_words += words;
      chars_msg.add(static_cast<double>(text.size()));
      words_msg.add(static_cast<double>(words));
      r.n_mentions += u.mentions.size();
      if (!u.mentions.empty()) ++r.messages_with_mention;
      if (u.mentions.size() > 1) ++r.messages_with_multiple;
      for (const auto& m : u.mentions) {
        const std::u32string_view span = std::u32string_view(text).substr(m.start, m.length());
        const std::size_t mw = count_words(span);
        r.chars_in_mentions += span.size();
        r.words_in_mentions += mw;
        chars_men.add(static_cast<double>(span.size()));
        words_men.add(static_cast<double>(mw));
      }
    }
  }
  r.pct_messages_with_mention = percent(r.messages_with_mention, r.n_messages);
  r.pct_messages_with_multiple = percent(r.messages_with_multiple, r.n_messages);
  r.pct_chars_in_mentions = percent(r.chars_in_mentions, r.n_chars);
  r.pct_words_in_mentions = percent(r.words_in_mentions, r.n_words);
  r.mean_chars_per_message = chars_msg.mean();
  r.sd_chars_per_message = chars_msg.sd();
  r.mean_words_per_message = words_msg.mean();
  r.sd_words_per_message = words_msg.sd();
  r.mean_chars_per_mention = chars_men.mean();
  r.sd_chars_per_mention = chars_men.sd();
  r.mean_words_per_mention = words_men.mean();
  r.sd_words_per_mention = words_men.sd();
  return r;
}

double round_half_up(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  // The epsilon absorbs binary representation error at exact .5 ties.
  const double scaled = std::abs(value) * scale;
  const double rounded = std::floor(scaled + 0.5 + 1e-9) / scale;
  return value < 0 ? -rounded : rounded;
}

namespace {

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", round_half_up(v, 2));
  return buf;
}

}  // namespace

std::string format_stats_table(const StatsReport& s, std::string_view dataset_id) {
  std::vector<std::pair<std::string, std::string>> rows = {
      {"# Dialogues", std::to_string(s.n_dialogues)},
      {"# Messages", std::to_string(s.n_messages)},
      {"# Mentions", std::to_string(s.n_mentions)},
      {"# Characters", std::to_string(s.n_chars)},
      {"# Words", std::to_string(s.n_words)},
      {"% Messages with mention", fixed2(s.pct_messages_with_mention) + "%"},
      {"% Messages with > 1 mention", fixed2(s.pct_messages_with_multiple) + "%"},
      {"# Characters in mentions", std::to_string(s.chars_in_mentions)},
      {"% Characters in mentions", fixed2(s.pct_chars_in_mentions) + "%"},
      {"# Words in mentions", std::to_string(s.words_in_mentions)},
      {"% Words in mentions", fixed2(s.pct_words_in_mentions) + "%"},
      {"Mean characters per message", fixed2(s.mean_chars_per_message) + " (" + fixed2(s.sd_chars_per_message) + ")"},
      {"Mean characters per mention", fixed2(s.mean_chars_per_mention) + " (" + fixed2(s.sd_chars_per_mention) + ")"},
      {"Mean words per message", fixed2(s.mean_words_per_message) + " (" + fixed2(s.sd_words_per_message) + ")"},
      {"Mean words per mention", fixed2(s.mean_words_per_mention) + " (" + fixed2(s.sd_words_per_mention) + ")"},
  };
  std::size_t width = 0;
  for (const auto& [k, v] : rows) width = std::max(width, k.size());
  std::ostringstream os;
  os << std::string(width, ' ') << "  " << dataset_id << "\n";
  for (const auto& [k, v] : rows) os << k << std::string(width - k.size(), ' ') << "  " << v << "\n";
  return os.str();
}

std::string stats_to_json(const StatsReport& s, std::string_view dataset_id) {
  ordered_json j;
  j["dataset_id"] = dataset_id;
  j["n_dialogues"] = s.n_dialogues;
  j["n_messages"] = s.n_messages;
  j["n_mentions"] = s.n_mentions;
  j["n_chars"] = s.n_chars;
  j["n_words"] = s.n_words;
  j["messages_with_mention"] = s.messages_with_mention;
  j["messages_with_multiple"] = s.messages_with_multiple;
  j["pct_messages_with_mention"] = s.pct_messages_with_mention;
  j["pct_messages_with_multiple"] = s.pct_messages_with_multiple;
  j["chars_in_mentions"] = s.chars_in_mentions;
  j["pct_chars_in_mentions"] = s.pct_chars_in_mentions;
  j["words_in_mentions"] = s.words_in_mentions;
  j["pct_words_in_mentions"] = s.pct_words_in_mentions;
  j["mean_chars_per_message"] = s.mean_chars_per_message;
  j["sd_chars_per_message"] = s.sd_chars_per_message;
  j["mean_chars_per_mention"] = s.mean_chars_per_mention;
  j["sd_chars_per_mention"] = s.sd_chars_per_mention;
  j["mean_words_per_message"] = s.mean_words_per_message;
  j["sd_words_per_message"] = s.sd_words_per_message;
  j["mean_words_per_mention"] = s.mean_words_per_mention;
  j["sd_words_per_mention"] = s.sd_words_per_mention;
  return j.dump(2) + "\n";
}

}  // namespace mdvg
