#include <random>

#include "doctest.h"
#include "mdvg/annotation.hpp"
#include "mdvg/error.hpp"
#include "mdvg/utf8.hpp"
#include "oracles/annotation_oracle.hpp"
#include "support.hpp"

using namespace mdvg;

namespace {

const MarkerConfig kPad{};
const MarkerConfig kBare{">>", "<<", false};

ErrorCode parse_error(std::string_view annotated, std::string_view original, const MarkerConfig& cfg = kPad) {
  try {
    parse(annotated, original, cfg);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("parse succeeded on " << annotated);
  return ErrorCode::BadRequest;
}

}  // namespace

TEST_CASE("render examples") {
  const std::string t = "then, for the third one, is the dark grey one okay?";
  CHECK(render(t, {{28, 41}}, kPad) == "then, for the third one, is >> the dark grey << one okay?");
  CHECK(render("hello", {}, kPad) == "hello");
  CHECK(render("ab", {{0, 1}}, kBare) == ">>a<<b");
  CHECK(render("a b", {{0, 1}, {2, 3}}, kPad) == ">> a << >> b <<");
}

TEST_CASE("render pads at word boundaries only") {
  CHECK(render("cats", {{0, 3}}, kPad) == ">> cat<<s");
  CHECK(render("cats", {{1, 4}}, kPad) == "c>>ats <<");
  CHECK(render("ab", {{0, 1}, {1, 2}}, kPad) == ">> a<<>>b <<");
  CHECK(render("a  b", {{1, 2}}, kPad) == "a>> << b");
  CHECK(render("x ", {{0, 2}}, kPad) == ">> x <<");
}

TEST_CASE("render rejects marker collisions") {
  CHECK_THROWS_WITH_AS(render("a >> b", {}, kPad), doctest::Contains("MarkerCollision"), Error);
  CHECK_THROWS_AS(render("<<", {}, kPad), Error);
  CHECK_THROWS_AS(render(">a", {{1, 2}}, kBare), Error);
  CHECK_THROWS_AS(render("a<", {{0, 1}}, kBare), Error);
  CHECK_NOTHROW(render("> a", {{2, 3}}, kPad));
}

TEST_CASE("render rejects invalid spans") {
  CHECK_THROWS_AS(render("abc", {{1, 1}}, kPad), Error);
  CHECK_THROWS_AS(render("abc", {{0, 4}}, kPad), Error);
  CHECK_THROWS_AS(render("abc", {{0, 2}, {1, 3}}, kPad), Error);
}

TEST_CASE("marker config invariants") {
  CHECK_THROWS_AS((MarkerConfig{"", "<<", true}.validate()), Error);
  CHECK_THROWS_AS((MarkerConfig{"<<", "<<", true}.validate()), Error);
  CHECK_THROWS_AS((MarkerConfig{"[[", "[", true}.validate()), Error);
  CHECK_NOTHROW((MarkerConfig{"[", "]", true}.validate()));
}

TEST_CASE("parse examples") {
  using V = std::vector<MentionSpan>;
  CHECK(parse("is >> the dark grey << one okay?", "is the dark grey one okay?", kPad) == V{{3, 16}});
  CHECK(parse("hello", "hello", kPad).empty());
  CHECK(parse(">> a << >> b <<", "a b", kPad) == V{{0, 1}, {2, 3}});
  CHECK(parse(">>a<<b", "ab", kBare) == V{{0, 1}});
}

TEST_CASE("parse accepts pad spaces being omitted") {
  using V = std::vector<MentionSpan>;
  CHECK(parse("is >>the dark grey<< one okay?", "is the dark grey one okay?", kPad) == V{{3, 16}});
  CHECK(parse("is >> the dark grey<< one okay?", "is the dark grey one okay?", kPad) == V{{3, 16}});
  CHECK(parse(">> a <<", "a", kBare) == V{{0, 1}});
}

TEST_CASE("parse errors") {
  CHECK(parse_error("is >> the dark grey one okay?", "is the dark grey one okay?") == ErrorCode::UnbalancedMarkers);
  CHECK(parse_error("is the << dark", "is the dark") == ErrorCode::UnbalancedMarkers);
  CHECK(parse_error(">> >> a << <<", "a") == ErrorCode::UnbalancedMarkers);
  CHECK(parse_error(">><< a", "a", kBare) == ErrorCode::EmptySpan);
  CHECK(parse_error("hello there", "hello") == ErrorCode::TrailingContent);
  CHECK(parse_error("help", "hello") == ErrorCode::ContentMismatch);
  CHECK(parse_error("hel", "hello") == ErrorCode::ContentMismatch);
  CHECK(parse_error("a >", "a") == ErrorCode::TrailingContent);
  CHECK(parse_error(">> a <", "a") == ErrorCode::UnbalancedMarkers);
  CHECK(parse_error("a >> b", "a >> b") == ErrorCode::MarkerCollision);
}

TEST_CASE("strip markers") {
  CHECK(strip_markers("is >> the dark grey << one okay?", kPad) == "is the dark grey one okay?");
  CHECK(strip_markers("hello", kPad) == "hello");
  CHECK(strip_markers(">>a<<", kBare) == "a");
  CHECK(strip_markers(">> a << >> b <<", kPad) == "a b");
}

TEST_CASE("annotate bundles the rendering") {
  const auto a = annotate("a b", {{2, 3}}, kPad);
  CHECK(a.annotated == "a >> b <<");
  CHECK(a.spans.size() == 1);
  CHECK(strip_markers(a.annotated, kPad) == a.original);
}

TEST_CASE("renderer agrees with the brute-force renderer") {
  for (const std::string text : {"a b", "ab", "  a", "a  ", "x y z", "\xC3\xA9 \xF0\x9F\x90\xB6"}) {
    const auto t = utf8::decode(text);
    for (const auto& spans : oracle::span_sets(t.size())) {
      CHECK(render(text, spans, kPad) == oracle::render(t, spans, kPad));
      CHECK(render(text, spans, kBare) == oracle::render(t, spans, kBare));
    }
  }
}

TEST_CASE("whitespace-edged spans read back as the trimmed alternative") {
  using V = std::vector<MentionSpan>;
  // [0,2)+[2,3) and [0,1)+[1,3) share one padded form
  CHECK(render("a b", {{0, 2}, {2, 3}}, kPad) == render("a b", {{0, 1}, {1, 3}}, kPad));
  CHECK(parse(">> a <<>> b <<", "a b", kPad) == V{{0, 1}, {1, 3}});
  CHECK(parse(">> a <<b", "a b", kPad) == V{{0, 2}});
  CHECK(parse(">> a << >> b <<", "a  b", kPad) == V{{0, 1}, {2, 4}});
}

TEST_CASE("property: parse inverts render") {
  std::mt19937_64 rng(20240611);
  std::size_t checked = 0, rejected = 0;
  for (int i = 0; i < 3000; ++i) {
    const std::string text = support::random_text(rng, 16);
    const auto raw = support::random_spans(rng, utf8::length(text));
    const auto spans = support::trimmed(raw, text);
    for (const auto* cfg : {&kPad, &kBare}) {
      std::string annotated;
      try {
        annotated = render(text, spans, *cfg);
      } catch (const Error& e) {
        REQUIRE(e.code() == ErrorCode::MarkerCollision);
        ++rejected;
        continue;
      }
      REQUIRE_MESSAGE(parse(annotated, text, *cfg) == spans, annotated);
      CHECK(strip_markers(annotated, *cfg) == text);
      ++checked;
    }
    std::string bare, padded;
    try {
      bare = render(text, raw, kBare);
      padded = render(text, raw, kPad);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MarkerCollision);
      continue;
    }
    CHECK(parse(bare, text, kBare) == raw);
    CHECK(render(text, parse(padded, text, kPad), kPad) == padded);
  }
  CHECK(checked > 5000);
  CHECK(rejected < checked / 10);
}

TEST_CASE("property: every canonical form of short texts parses back") {
  for (const std::string text : {"a b", " a ", "a  b", "ab c", "\t\xC3\xA9"}) {
    for (const auto* cfg : {&kPad, &kBare}) {
      for (const auto& [s, spans] : oracle::annotated_forms(text, *cfg).members) {
        const auto got = parse(s, text, *cfg);
        if (!cfg->pad_with_space || support::is_trimmed(spans, text))
          CHECK(got == spans);
        else
          CHECK(oracle::render(utf8::decode(text), got, *cfg) == s);
      }
    }
  }
}
