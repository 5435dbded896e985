#include "mdvg/annotation.hpp"

#include <algorithm>

#include "mdvg/error.hpp"
#include "mdvg/utf8.hpp"

namespace mdvg {

void MarkerConfig::validate() const {
  if (start_marker.empty() || end_marker.empty())
    throw Error(ErrorCode::InvariantViolation, "markers must be nonempty");
  if (start_marker == end_marker) throw Error(ErrorCode::InvariantViolation, "markers must differ");
  if (start_marker.find(end_marker) != std::string::npos || end_marker.find(start_marker) != std::string::npos)
    throw Error(ErrorCode::InvariantViolation, "one marker contains the other");
}

void check_no_marker_collision(std::string_view text, const MarkerConfig& cfg) {
  for (const std::string& m : {cfg.start_marker, cfg.end_marker}) {
    if (auto at = text.find(m); at != std::string_view::npos)
      throw Error(ErrorCode::MarkerCollision,
                  "text contains marker \"" + m + "\" at character " + std::to_string(utf8::length(text.substr(0, at))));
  }
}

namespace {

std::size_t count_occurrences(std::string_view s, std::string_view m) {
  std::size_t n = 0;
  for (auto at = s.find(m); at != std::string_view::npos; at = s.find(m, at + 1)) ++n;
  return n;
}

bool starts_with(std::u32string_view s, std::size_t at, std::u32string_view prefix) {
  return s.size() - std::min(at, s.size()) >= prefix.size() && s.compare(at, prefix.size(), prefix) == 0;
}

}  // namespace

std::string render(std::string_view original, const std::vector<MentionSpan>& spans, const MarkerConfig& cfg) {
  cfg.validate();
  check_no_marker_collision(original, cfg);
  const std::u32string text = utf8::decode(original);
  if (auto v = validate_spans(spans, text.size(), "", 0); !v.empty())
    throw Error(ErrorCode::InvariantViolation, v.front().describe());

  auto space = [&](std::size_t i) { return utf8::is_space(text[i]); };
  std::string out;
  std::size_t cursor = 0;
  auto copy = [&](std::size_t from, std::size_t to) {
    for (std::size_t i = from; i < to; ++i) utf8::append(out, text[i]);
  };
  for (const auto& s : spans) {
    copy(cursor, s.start);
    out += cfg.start_marker;
    if (cfg.pad_with_space && (s.start == 0 || space(s.start - 1)) && !space(s.start)) out += ' ';
    copy(s.start, s.end);
    if (cfg.pad_with_space && (s.end == text.size() || space(s.end)) && !space(s.end - 1)) out += ' ';
    out += cfg.end_marker;
    cursor = s.end;
  }
  copy(cursor, text.size());
  if (count_occurrences(out, cfg.start_marker) + count_occurrences(out, cfg.end_marker) != 2 * spans.size())
    throw Error(ErrorCode::MarkerCollision, "a marker next to the text forms an extra marker in \"" + out + "\"");
  return out;
}

AnnotatedUtterance annotate(std::string_view original, const std::vector<MentionSpan>& spans, const MarkerConfig& cfg) {
  return {std::string(original), render(original, spans, cfg), spans};
}

std::string strip_markers(std::string_view annotated, const MarkerConfig& cfg) {
  const std::u32string a = utf8::decode(annotated);
  const std::u32string ms = utf8::decode(cfg.start_marker);
  const std::u32string me = utf8::decode(cfg.end_marker);
  std::u32string out;
  for (std::size_t i = 0; i < a.size();) {
    if (!ms.empty() && starts_with(a, i, ms)) {
      std::size_t next = i + ms.size();
      const bool boundary = i == 0 || utf8::is_space(a[i - 1]);
      if (boundary && next < a.size() && a[next] == U' ' && next + 1 < a.size() && !utf8::is_space(a[next + 1])) ++next;
      i = next;
    } else if (!me.empty() && starts_with(a, i, me)) {
      const std::size_t next = i + me.size();
      const bool boundary = next == a.size() || utf8::is_space(a[next]);
      if (boundary && out.size() >= 2 && out.back() == U' ' && !utf8::is_space(out[out.size() - 2])) out.pop_back();
      i = next;
    } else {
      out.push_back(a[i++]);
    }
  }
  return utf8::encode(out);
}

// ---------------------------------------------------------------------------
// AnnotationAutomaton

AnnotationAutomaton::AnnotationAutomaton(std::string target, std::size_t protected_prefix, MarkerConfig cfg,
                                         PadPolicy policy)
    : target_(std::move(target)), prefix_(protected_prefix), cfg_(std::move(cfg)), policy_(policy) {
  cfg_.validate();
  const std::size_t n = target_.size();
  if (prefix_ > n) throw Error(ErrorCode::IndexOutOfRange, "protected prefix longer than target");
  boundary_.assign(n + 1, false);
  space_at_.assign(n + 1, false);
  space_before_.assign(n + 1, false);
  char_index_.assign(n + 1, 0);
  const std::u32string chars = utf8::decode(target_);
  std::size_t pos = 0;
  for (std::size_t c = 0; c < chars.size(); ++c) {
    std::string enc;
    utf8::append(enc, chars[c]);
    // Invalid bytes decode to U+FFFD one byte at a time; keep the source width.
    const std::size_t width = chars[c] == 0xFFFD && target_.compare(pos, enc.size(), enc) != 0 ? 1 : enc.size();
    boundary_[pos] = true;
    const bool sp = utf8::is_space(chars[c]);
    space_at_[pos] = sp;
    for (std::size_t b = 0; b < width; ++b) char_index_[pos + b] = c;
    pos += width;
    space_before_[pos] = sp;
  }
  boundary_[n] = true;
  char_index_[n] = chars.size();
  if (!boundary_[prefix_]) throw Error(ErrorCode::IndexOutOfRange, "protected prefix splits a character");
}

bool AnnotationAutomaton::accepting(const State& s) const {
  return s.phase == Phase::Content && s.pos == target_.size() && !s.in_span;
}

bool AnnotationAutomaton::can_start(const State& s) const {
  return s.phase == Phase::Content && !s.in_span && s.pos >= prefix_ && s.pos < target_.size() && boundary_[s.pos];
}

bool AnnotationAutomaton::can_end(const State& s) const {
  return s.phase == Phase::Content && s.in_span && s.nonempty && boundary_[s.pos];
}

bool AnnotationAutomaton::pad_after_start(std::size_t pos) const {
  return (pos == 0 || space_before_[pos]) && !space_at_[pos];
}

bool AnnotationAutomaton::pad_before_end(std::size_t pos) const {
  return (pos == target_.size() || space_at_[pos]) && !space_before_[pos];
}

void AnnotationAutomaton::finish_start(State s, std::vector<Transition>& out) const {
  s.in_span = true;
  s.nonempty = false;
  s.matched = 0;
  const bool pad_position = pad_after_start(s.pos);
  const bool want_pad = policy_ == PadPolicy::Optional ? pad_position : cfg_.pad_with_space && pad_position;
  const bool allow_bare = policy_ == PadPolicy::Optional || !want_pad;
  if (want_pad) {
    s.phase = Phase::PadAfterStart;
    out.push_back({s, Event::SpanStart});
  }
  if (allow_bare) {
    s.phase = Phase::Content;
    out.push_back({s, Event::SpanStart});
  }
}

void AnnotationAutomaton::step(const State& s, std::uint8_t byte, std::vector<Transition>& out) const {
  const std::string& ms = cfg_.start_marker;
  const std::string& me = cfg_.end_marker;
  const char b = static_cast<char>(byte);

  auto end_marker_byte = [&](State st, std::size_t index) {
    if (me[index] != b) return;
    st.matched = static_cast<std::uint8_t>(index + 1);
    if (st.matched == me.size()) {
      st.phase = Phase::Content;
      st.matched = 0;
      st.in_span = false;
      st.nonempty = false;
      out.push_back({st, Event::SpanEnd});
    } else {
      st.phase = Phase::InEnd;
      out.push_back({st, Event::None});
    }
  };
  auto start_marker_byte = [&](State st, std::size_t index) {
    if (ms[index] != b) return;
    st.matched = static_cast<std::uint8_t>(index + 1);
    if (st.matched == ms.size()) {
      finish_start(st, out);
    } else {
      st.phase = Phase::InStart;
      out.push_back({st, Event::None});
    }
  };

  switch (s.phase) {
    case Phase::Content: {
      if (can_end(s)) {
        const bool pad_position = pad_before_end(s.pos);
        const bool want_pad = policy_ == PadPolicy::Optional ? pad_position : cfg_.pad_with_space && pad_position;
        const bool allow_bare = policy_ == PadPolicy::Optional || !want_pad;
        if (want_pad && b == ' ') {
          State st = s;
          st.phase = Phase::PadBeforeEnd;
          out.push_back({st, Event::None});
        }
        if (allow_bare) end_marker_byte(s, 0);
      }
      if (can_start(s)) start_marker_byte(s, 0);
      if (s.pos < target_.size() && target_[s.pos] == b) {
        State st = s;
        ++st.pos;
        st.nonempty = s.in_span;
        out.push_back({st, Event::None});
      }
      break;
    }
    case Phase::InStart:
      start_marker_byte(s, s.matched);
      break;
    case Phase::PadAfterStart:
      if (b == ' ') {
        State st = s;
        st.phase = Phase::Content;
        out.push_back({st, Event::None});
      }
      break;
    case Phase::PadBeforeEnd:
      end_marker_byte(s, 0);
      break;
    case Phase::InEnd:
      end_marker_byte(s, s.matched);
      break;
  }
}

std::vector<AnnotationAutomaton::State> AnnotationAutomaton::step(const std::vector<State>& states,
                                                                  std::uint8_t byte) const {
  std::vector<Transition> scratch;
  for (const auto& s : states) step(s, byte, scratch);
  std::vector<State> out;
  out.reserve(scratch.size());
  for (const auto& t : scratch) out.push_back(t.next);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void AnnotationAutomaton::next_bytes(const State& s, std::vector<std::uint8_t>& out) const {
  auto push = [&](char c) { out.push_back(static_cast<std::uint8_t>(c)); };
  switch (s.phase) {
    case Phase::Content:
      if (s.pos < target_.size()) push(target_[s.pos]);
      if (can_start(s)) push(cfg_.start_marker[0]);
      if (can_end(s)) {
        const bool pad_position = pad_before_end(s.pos);
        const bool want_pad = policy_ == PadPolicy::Optional ? pad_position : cfg_.pad_with_space && pad_position;
        if (want_pad) push(' ');
        if (policy_ == PadPolicy::Optional || !want_pad) push(cfg_.end_marker[0]);
      }
      break;
    case Phase::InStart: push(cfg_.start_marker[s.matched]); break;
    case Phase::PadAfterStart: push(' '); break;
    case Phase::PadBeforeEnd: push(cfg_.end_marker[0]); break;
    case Phase::InEnd: push(cfg_.end_marker[s.matched]); break;
  }
}

// ---------------------------------------------------------------------------
// parse

namespace {

using State = AnnotationAutomaton::State;
using Phase = AnnotationAutomaton::Phase;

struct Path {
  State state;
  std::vector<std::size_t> bounds;  // byte positions: start, end, start, end, ...
  std::size_t ragged = 0;           // closed spans' edges that are whitespace
};

const Path& furthest(const std::vector<Path>& paths) {
  const Path* best = &paths.front();
  for (const auto& p : paths) {
    if (p.state.pos > best->state.pos ||
        (p.state.pos == best->state.pos && p.state.phase == Phase::Content && best->state.phase != Phase::Content))
      best = &p;
  }
  return *best;
}

}  // namespace

std::vector<MentionSpan> parse(std::string_view annotated, std::string_view original, const MarkerConfig& cfg) {
  check_no_marker_collision(original, cfg);
  const AnnotationAutomaton nfa(std::string(original), 0, cfg, AnnotationAutomaton::PadPolicy::Optional);
  const std::size_t n = original.size();

  auto where = [&](std::size_t byte_pos, const Path& p) {
    return "annotated character " + std::to_string(utf8::length(annotated.substr(0, byte_pos))) +
           ", original character " + std::to_string(nfa.char_offset(p.state.pos));
  };

  const std::u32string chars = utf8::decode(original);
  auto ws_at = [&](std::size_t byte_pos) { return utf8::is_space(chars[nfa.char_offset(byte_pos)]); };
  auto ragged_edges = [&](std::size_t start, std::size_t end) {
    return std::size_t{ws_at(start)} + std::size_t{ws_at(end - 1)};
  };
  auto cost = [&](const Path& p) {
    std::size_t c = p.ragged;
    if (p.bounds.size() % 2 == 1) c += ws_at(p.bounds.back());
    return c;
  };

  std::vector<Path> paths{Path{nfa.initial(), {}, 0}};
  std::vector<AnnotationAutomaton::Transition> scratch;
  for (std::size_t a = 0; a < annotated.size(); ++a) {
    std::vector<Path> next;
    for (const auto& p : paths) {
      scratch.clear();
      nfa.step(p.state, static_cast<std::uint8_t>(annotated[a]), scratch);
      for (const auto& t : scratch) {
        Path q{t.next, p.bounds, p.ragged};
        if (t.event == AnnotationAutomaton::Event::SpanStart) {
          q.bounds.push_back(t.next.pos);
        } else if (t.event == AnnotationAutomaton::Event::SpanEnd) {
          q.ragged += ragged_edges(q.bounds.back(), t.next.pos);
          q.bounds.push_back(t.next.pos);
        }
        // Same state means same future; keep the reading with the fewest
        // whitespace-edged spans, first come on ties.
        auto same = std::find_if(next.begin(), next.end(), [&](const Path& r) { return r.state == t.next; });
        if (same == next.end())
          next.push_back(std::move(q));
        else if (cost(q) < cost(*same))
          *same = std::move(q);
      }
    }
    if (next.empty()) {
      const Path& best = furthest(paths);
      const std::string_view rest = annotated.substr(a);
      const bool at_end_marker = rest.starts_with(cfg.end_marker) ||
                                 (rest.size() > cfg.end_marker.size() && rest[0] == ' ' &&
                                  rest.substr(1).starts_with(cfg.end_marker));
      const bool in_span = best.state.in_span;
      if (at_end_marker && !in_span)
        throw Error(ErrorCode::UnbalancedMarkers, "end marker without an open span at " + where(a, best));
      if (at_end_marker && !best.state.nonempty)
        throw Error(ErrorCode::EmptySpan, "span closed immediately at " + where(a, best));
      if (rest.starts_with(cfg.start_marker) && in_span)
        throw Error(ErrorCode::UnbalancedMarkers, "nested start marker at " + where(a, best));
      if (best.state.pos == n && best.state.phase == Phase::Content)
        throw Error(ErrorCode::TrailingContent, "unexpected content after the original at " + where(a, best));
      throw Error(ErrorCode::ContentMismatch, "mismatch at " + where(a, best));
    }
    paths = std::move(next);
  }

  for (const auto& p : paths) {
    if (!nfa.accepting(p.state)) continue;
    std::vector<MentionSpan> spans;
    for (std::size_t i = 0; i + 1 < p.bounds.size(); i += 2)
      spans.push_back({nfa.char_offset(p.bounds[i]), nfa.char_offset(p.bounds[i + 1])});
    return spans;
  }
  const Path& best = furthest(paths);
  if (best.state.in_span && best.state.pos == n)
    throw Error(ErrorCode::UnbalancedMarkers, "unclosed span at end of input");
  if (best.state.phase == Phase::InStart || best.state.phase == Phase::InEnd)
    throw Error(ErrorCode::UnbalancedMarkers, "truncated marker at end of input");
  throw Error(ErrorCode::ContentMismatch, "annotated string ends early at " + where(annotated.size(), best));
}

}  // namespace mdvg
