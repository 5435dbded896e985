#include "mdvg/constraint.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mdvg/digest.hpp"
#include "mdvg/error.hpp"
#include "mdvg/utf8.hpp"

namespace mdvg {

using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Vocab

Vocab::Vocab(std::map<TokenId, std::string> entries, std::set<TokenId> start_marker_ids,
             std::set<TokenId> end_marker_ids, TokenId eos_id, const MarkerConfig& cfg)
    : entries_(std::move(entries)),
      start_ids_(std::move(start_marker_ids)),
      end_ids_(std::move(end_marker_ids)),
      eos_id_(eos_id) {
  cfg.validate();
  auto check_markers = [&](const std::set<TokenId>& ids, const std::string& marker, const char* role) {
    if (ids.empty()) throw Error(ErrorCode::MarkerNotInVocab, std::string("no ") + role + " marker ids declared");
    for (TokenId id : ids) {
      if (id == eos_id_) throw Error(ErrorCode::MalformedVocab, std::string(role) + " marker id equals eos_id");
      auto it = entries_.find(id);
      if (it == entries_.end())
        throw Error(ErrorCode::MarkerNotInVocab, std::string(role) + " marker id " + std::to_string(id) + " has no entry");
      if (it->second != marker && it->second != " " + marker)
        throw Error(ErrorCode::MarkerNotInVocab, std::string(role) + " marker id " + std::to_string(id) +
                                                     " expands to \"" + it->second + "\", expected \"" + marker + "\"");
    }
  };
  check_markers(start_ids_, cfg.start_marker, "start");
  check_markers(end_ids_, cfg.end_marker, "end");

  trie_.emplace_back();
  for (const auto& [id, bytes] : entries_) {
    if (id == eos_id_) continue;
    if (bytes.empty()) throw Error(ErrorCode::MalformedVocab, "token " + std::to_string(id) + " has no bytes");
    std::uint32_t node = 0;
    for (char c : bytes) {
      const auto b = static_cast<std::uint8_t>(c);
      std::uint32_t next = child(node, b);
      if (next == 0) {
        next = static_cast<std::uint32_t>(trie_.size());
        trie_.emplace_back();
        auto& kids = trie_[node].children;
        kids.insert(std::lower_bound(kids.begin(), kids.end(), std::make_pair(b, std::uint32_t{0})),
                    std::make_pair(b, next));
      }
      node = next;
    }
    trie_[node].tokens.push_back(id);
  }
}

std::uint32_t Vocab::child(std::uint32_t node, std::uint8_t byte) const {
  const auto& kids = trie_[node].children;
  auto it = std::lower_bound(kids.begin(), kids.end(), std::make_pair(byte, std::uint32_t{0}));
  return it != kids.end() && it->first == byte ? it->second : 0;
}

const std::string* Vocab::bytes(TokenId id) const {
  auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second;
}

Vocab Vocab::parse(std::string_view json_text, const MarkerConfig& cfg) {
  auto bad = [](const std::string& msg) -> Error { return Error(ErrorCode::MalformedVocab, msg); };
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw bad(e.what());
  }
  if (!root.is_object()) throw bad("top level must be an object");
  auto entries_it = root.find("entries");
  if (entries_it == root.end() || !entries_it->is_object()) throw bad("missing \"entries\" object");
  std::map<TokenId, std::string> entries;
  for (const auto& [key, value] : entries_it->items()) {
    TokenId id;
    try {
      std::size_t used = 0;
      id = static_cast<TokenId>(std::stol(key, &used));
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw bad("entry key \"" + key + "\" is not an integer id");
    }
    if (!value.is_array()) throw bad("entry " + key + " must be a byte array");
    std::string bytes;
    for (const auto& b : value) {
      if (!b.is_number_integer() || b.get<int>() < 0 || b.get<int>() > 255)
        throw bad("entry " + key + " contains a non-byte value");
      bytes.push_back(static_cast<char>(b.get<int>()));
    }
    entries.emplace(id, std::move(bytes));
  }
  auto special_it = root.find("special");
  if (special_it == root.end() || !special_it->is_object()) throw bad("missing \"special\" object");
  const json& special = *special_it;
  auto eos_it = special.find("eos_id");
  if (eos_it == special.end() || !eos_it->is_number_integer()) throw bad("missing integer \"special.eos_id\"");
  auto id_set = [&](const char* key) {
    std::set<TokenId> ids;
    auto it = special.find(key);
    if (it == special.end()) return ids;
    if (!it->is_array()) throw bad(std::string("special.") + key + " must be an array");
    for (const auto& v : *it) {
      if (!v.is_number_integer()) throw bad(std::string("special.") + key + " must hold integers");
      ids.insert(v.get<TokenId>());
    }
    return ids;
  };
  return Vocab(std::move(entries), id_set("start_marker_ids"), id_set("end_marker_ids"), eos_it->get<TokenId>(), cfg);
}

Vocab Vocab::load(const std::filesystem::path& path, const MarkerConfig& cfg) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), cfg);
}

std::string Vocab::to_json() const {
  ordered_json root;
  ordered_json entries = ordered_json::object();
  for (const auto& [id, bytes] : entries_) {
    ordered_json arr = ordered_json::array();
    for (unsigned char c : bytes) arr.push_back(static_cast<int>(c));
    entries[std::to_string(id)] = std::move(arr);
  }
  root["entries"] = std::move(entries);
  root["special"]["start_marker_ids"] = start_ids_;
  root["special"]["end_marker_ids"] = end_ids_;
  root["special"]["eos_id"] = eos_id_;
  return root.dump();
}

std::string Vocab::digest() const {
  std::uint64_t h = fnv1a64("mdvg-vocab-v1");
  for (const auto& [id, bytes] : entries_) {
    h = fnv1a64(std::to_string(id) + ":", h);
    h = fnv1a64(std::to_string(bytes.size()) + ":", h);
    h = fnv1a64(bytes, h);
  }
  for (TokenId id : start_ids_) h = fnv1a64("s" + std::to_string(id), h);
  for (TokenId id : end_ids_) h = fnv1a64("e" + std::to_string(id), h);
  return hex64(fnv1a64("eos" + std::to_string(eos_id_), h));
}

bool TokenMask::contains(TokenId id) const { return std::binary_search(allowed.begin(), allowed.end(), id); }

// ---------------------------------------------------------------------------
// Session

using State = AnnotationAutomaton::State;

Session::Session(std::string content, const MarkerConfig& cfg, std::size_t protected_prefix) {
  check_no_marker_collision(content, cfg);
  automaton_ = std::make_shared<const AnnotationAutomaton>(std::move(content), protected_prefix, cfg,
                                                           AnnotationAutomaton::PadPolicy::Canonical);
  states_.push_back(automaton_->initial());
}

Session open_session(const Vocab& /*vocab*/, std::string_view content, const MarkerConfig& cfg,
                     std::size_t protected_prefix) {
  return Session(std::string(content), cfg, protected_prefix);
}

TokenMask Session::allowed_tokens(const Vocab& vocab) const {
  if (done_) throw Error(ErrorCode::SessionDone, "session already finished");
  TokenMask mask;
  const AnnotationAutomaton& nfa = *automaton_;
  if (std::any_of(states_.begin(), states_.end(), [&](const State& s) { return nfa.accepting(s); }))
    mask.allowed.push_back(vocab.eos_id());

  // Walk only the trie branches the automaton can follow, so the cost tracks
  // the number of matching tokens rather than the vocabulary size.
  struct Frame {
    std::uint32_t node;
    std::vector<State> states;
  };
  std::vector<Frame> stack{{0, states_}};
  std::vector<std::uint8_t> candidates;
  while (!stack.empty()) {
    Frame frame = std::move(stack.back());
    stack.pop_back();
    const auto& node = vocab.trie_[frame.node];
    if (frame.node != 0) mask.allowed.insert(mask.allowed.end(), node.tokens.begin(), node.tokens.end());
    if (node.children.empty()) continue;
    candidates.clear();
    for (const auto& s : frame.states) nfa.next_bytes(s, candidates);
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    for (std::uint8_t b : candidates) {
      const std::uint32_t next = vocab.child(frame.node, b);
      if (next == 0) continue;
      auto states = nfa.step(frame.states, b);
      if (!states.empty()) stack.push_back({next, std::move(states)});
    }
  }
  std::sort(mask.allowed.begin(), mask.allowed.end());
  mask.allowed.erase(std::unique(mask.allowed.begin(), mask.allowed.end()), mask.allowed.end());
  return mask;
}

void Session::advance(TokenId token, const Vocab& vocab) {
  if (done_) throw Error(ErrorCode::SessionDone, "session already finished");
  const AnnotationAutomaton& nfa = *automaton_;
  if (token == vocab.eos_id()) {
    if (!std::any_of(states_.begin(), states_.end(), [&](const State& s) { return nfa.accepting(s); }))
      throw Error(ErrorCode::DisallowedToken, "EOS before the target is fully reproduced");
    done_ = true;
    return;
  }
  const std::string* bytes = vocab.bytes(token);
  if (bytes == nullptr) throw Error(ErrorCode::DisallowedToken, "unknown token id " + std::to_string(token));
  auto states = states_;
  for (char c : *bytes) {
    states = nfa.step(states, static_cast<std::uint8_t>(c));
    if (states.empty()) throw Error(ErrorCode::DisallowedToken, "token " + std::to_string(token) + " not allowed here");
  }
  states_ = std::move(states);
  emitted_ += *bytes;
}

const State& Session::furthest_behind() const {
  if (done_) {
    for (const auto& s : states_)
      if (automaton_->accepting(s)) return s;
  }
  return *std::min_element(states_.begin(), states_.end(),
                           [](const State& a, const State& b) { return a.pos < b.pos; });
}

bool Session::in_span() const { return furthest_behind().in_span; }
bool Session::span_nonempty() const { return furthest_behind().nonempty; }
std::size_t Session::consumed() const { return automaton_->char_offset(furthest_behind().pos); }

std::string Session::decoded_string() const { return emitted_.substr(0, utf8::complete_prefix(emitted_)); }
std::string Session::pending_bytes() const { return emitted_.substr(utf8::complete_prefix(emitted_)); }

}  // namespace mdvg
