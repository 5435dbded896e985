#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mdvg/corpus.hpp"

namespace mdvg {

struct MarkerConfig {
  std::string start_marker = ">>";
  std::string end_marker = "<<";
  bool pad_with_space = true;

  // Throws InvariantViolation unless markers are nonempty, distinct and
  // neither contains the other.
  void validate() const;
};

struct AnnotatedUtterance {
  std::string original;
  std::string annotated;
  std::vector<MentionSpan> spans;
};

// Throws MarkerCollision if `text` contains either marker.
void check_no_marker_collision(std::string_view text, const MarkerConfig& cfg);

// Inserts the markers around each span. With padding on, a marker that sits
// at a word boundary is written as its own space-separated token; inside a
// word it is inserted bare. Throws MarkerCollision if the text contains a
// marker, or if an inserted marker and the text around it form an extra one
// (">a" with a span over "a" would read ">>>a").
std::string render(std::string_view original, const std::vector<MentionSpan>& spans, const MarkerConfig& cfg);

// Recovers spans (scalar offsets into `original`) from an annotated string.
// Canonical pad spaces are optional, so padded and bare renderings both parse.
// Errors: ContentMismatch, UnbalancedMarkers, EmptySpan, TrailingContent,
// MarkerCollision (original contains a marker).
std::vector<MentionSpan> parse(std::string_view annotated, std::string_view original, const MarkerConfig& cfg);

// Best-effort removal of markers and their pad spaces. Never fails.
std::string strip_markers(std::string_view annotated, const MarkerConfig& cfg);

AnnotatedUtterance annotate(std::string_view original, const std::vector<MentionSpan>& spans, const MarkerConfig& cfg);

// Byte-level nondeterministic automaton over the canonical annotated forms of
// a target string. Bytes [0, protected_prefix) are plain content where no
// marker may be placed. Shared by the parser (PadPolicy::Optional) and the
// constraint engine (PadPolicy::Canonical).
class AnnotationAutomaton {
 public:
  enum class PadPolicy {
    Canonical,  // pad exactly where the config's canonical form has one
    Optional,   // pad may appear or not at every canonical pad position
  };

  enum class Phase : std::uint8_t { Content, InStart, PadAfterStart, PadBeforeEnd, InEnd };

  struct State {
    std::uint32_t pos = 0;  // bytes of target consumed
    Phase phase = Phase::Content;
    std::uint8_t matched = 0;  // marker bytes matched so far (InStart/InEnd)
    bool in_span = false;
    bool nonempty = false;  // span has consumed content

    auto operator<=>(const State&) const = default;
  };

  enum class Event : std::uint8_t { None, SpanStart, SpanEnd };

  struct Transition {
    State next;
    Event event = Event::None;
  };

  AnnotationAutomaton(std::string target, std::size_t protected_prefix, MarkerConfig cfg, PadPolicy policy);

  State initial() const { return {}; }
  bool accepting(const State& s) const;

  // Appends every successor of `s` on `byte`.
  void step(const State& s, std::uint8_t byte, std::vector<Transition>& out) const;

  // Advances a sorted, deduplicated state set; the result is sorted and deduplicated.
  std::vector<State> step(const std::vector<State>& states, std::uint8_t byte) const;

  // Bytes on which `s` has at least one transition (at most four).
  void next_bytes(const State& s, std::vector<std::uint8_t>& out) const;

  const std::string& target() const { return target_; }
  std::size_t protected_prefix() const { return prefix_; }
  const MarkerConfig& config() const { return cfg_; }

  // Scalar offset of a byte position (byte positions inside a scalar round down).
  std::size_t char_offset(std::size_t byte_pos) const { return char_index_[byte_pos]; }

 private:
  bool can_start(const State& s) const;
  bool can_end(const State& s) const;
  bool pad_after_start(std::size_t pos) const;
  bool pad_before_end(std::size_t pos) const;
  void finish_start(State s, std::vector<Transition>& out) const;

  std::string target_;
  std::size_t prefix_;
  MarkerConfig cfg_;
  PadPolicy policy_;
  std::vector<bool> boundary_;   // byte position starts a scalar (or is the end)
  std::vector<bool> space_at_;   // scalar starting here is whitespace
  std::vector<bool> space_before_;  // scalar ending here is whitespace
  std::vector<std::size_t> char_index_;
};

}  // namespace mdvg
