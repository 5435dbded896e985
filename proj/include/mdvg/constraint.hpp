#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mdvg/annotation.hpp"

namespace mdvg {

using TokenId = std::int32_t;

// Token id -> byte expansion, plus the ids that play the marker and EOS roles.
// Immutable after construction; share freely between threads.
class Vocab {
 public:
  // Validates the marker ids against `cfg`: each must expand to the marker,
  // optionally preceded by a single space.
  Vocab(std::map<TokenId, std::string> entries, std::set<TokenId> start_marker_ids, std::set<TokenId> end_marker_ids,
        TokenId eos_id, const MarkerConfig& cfg = {});

  static Vocab load(const std::filesystem::path& path, const MarkerConfig& cfg = {});
  static Vocab parse(std::string_view json_text, const MarkerConfig& cfg = {});

  const std::map<TokenId, std::string>& entries() const { return entries_; }
  const std::set<TokenId>& start_marker_ids() const { return start_ids_; }
  const std::set<TokenId>& end_marker_ids() const { return end_ids_; }
  TokenId eos_id() const { return eos_id_; }
  std::size_t size() const { return entries_.size(); }

  // nullptr for unknown ids.
  const std::string* bytes(TokenId id) const;

  // Content digest over ids, bytes and special roles.
  std::string digest() const;

  std::string to_json() const;

 private:
  friend class Session;

  struct Node {
    std::vector<std::pair<std::uint8_t, std::uint32_t>> children;  // sorted by byte
    std::vector<TokenId> tokens;                                    // ids whose expansion ends here
  };

  std::uint32_t child(std::uint32_t node, std::uint8_t byte) const;  // 0 if absent (root is never a child)

  std::map<TokenId, std::string> entries_;
  std::set<TokenId> start_ids_;
  std::set<TokenId> end_ids_;
  TokenId eos_id_;
  std::vector<Node> trie_;
};

struct TokenMask {
  std::vector<TokenId> allowed;  // sorted ascending

  bool contains(TokenId id) const;
  bool empty() const { return allowed.empty(); }
};

// Decoding state for one target. The set of live automaton states usually has
// one element; it grows only while a space could still be either content or
// the pad before an end marker. Single owner; do not share across threads.
class Session {
 public:
  // `content` is the full completion content; its first `protected_prefix`
  // bytes (e.g. the speaker prefix) never receive markers.
  Session(std::string content, const MarkerConfig& cfg, std::size_t protected_prefix = 0);

  // Every id whose expansion keeps the emitted bytes a prefix of some canonical
  // annotated form of the target; EOS iff the emitted bytes are such a form.
  TokenMask allowed_tokens(const Vocab& vocab) const;

  // Throws DisallowedToken (state unchanged) or SessionDone.
  void advance(TokenId token, const Vocab& vocab);

  bool done() const { return done_; }
  bool in_span() const;
  bool span_nonempty() const;
  std::size_t consumed() const;  // scalars of target reproduced (furthest-behind live state)
  const std::string& target() const { return automaton_->target(); }

  // Emitted text up to the last complete scalar; pending_bytes() holds the rest.
  std::string decoded_string() const;
  std::string pending_bytes() const;
  const std::string& emitted_bytes() const { return emitted_; }

  const std::vector<AnnotationAutomaton::State>& states() const { return states_; }

 private:
  const AnnotationAutomaton::State& furthest_behind() const;

  std::shared_ptr<const AnnotationAutomaton> automaton_;
  std::vector<AnnotationAutomaton::State> states_;
  std::string emitted_;
  bool done_ = false;
};

// Throws MarkerCollision if the content contains a marker.
Session open_session(const Vocab& vocab, std::string_view content, const MarkerConfig& cfg = {},
                     std::size_t protected_prefix = 0);

}  // namespace mdvg
