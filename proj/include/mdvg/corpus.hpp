#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mdvg {

// Half-open range of Unicode scalar offsets into an utterance.
struct MentionSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - start; }
  auto operator<=>(const MentionSpan&) const = default;
};

enum class Speaker { A, B };

char speaker_char(Speaker s);
std::optional<Speaker> parse_speaker(std::string_view s);

struct Utterance {
  int index = 0;
  Speaker speaker = Speaker::A;
  std::string text;  // UTF-8
  std::vector<MentionSpan> mentions;
};

struct Dialogue {
  std::string dialogue_id;
  std::string image_set_id;
  std::optional<std::string> category;
  std::vector<Utterance> utterances;
};

struct Corpus {
  std::string dataset_id;
  std::vector<Dialogue> dialogues;

  std::size_t utterance_count() const;
  const Dialogue* find(std::string_view dialogue_id) const;
};

enum class ViolationCode {
  DuplicateDialogueId,
  EmptyDialogue,
  NonContiguousIndex,
  SpanOutOfBounds,
  EmptySpan,
  UnsortedMentions,
  OverlapViolation,
  NestingViolation,
};

std::string_view to_string(ViolationCode code);

struct Violation {
  ViolationCode code;
  std::string dialogue_id;
  std::optional<int> utterance_index;
  std::optional<std::size_t> span_index;
  std::string message;

  std::string describe() const;
};

// Checks the span-list invariants shared by gold mentions and predictions:
// in bounds, nonempty, sorted by start, pairwise disjoint.
std::vector<Violation> validate_spans(const std::vector<MentionSpan>& spans, std::size_t text_length,
                                      const std::string& dialogue_id, int utterance_index);

std::vector<Violation> validate(const Corpus& corpus);

// Throws MalformedFile on syntax/schema problems and InvariantViolation
// (first violation in the message) if the parsed corpus is invalid.
Corpus load_corpus(const std::filesystem::path& path);
Corpus parse_corpus(std::string_view json_text);

// Canonical serialization: fixed key order, two-space indent, trailing newline.
std::string serialize_corpus(const Corpus& corpus);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

struct StatsReport {
  std::size_t n_dialogues = 0;
  std::size_t n_messages = 0;
  std::size_t n_mentions = 0;
  std::size_t n_chars = 0;
  std::size_t n_words = 0;
  std::size_t messages_with_mention = 0;
  std::size_t messages_with_multiple = 0;
  std::size_t chars_in_mentions = 0;
  std::size_t words_in_mentions = 0;

  double pct_messages_with_mention = 0;
  double pct_messages_with_multiple = 0;
  double pct_chars_in_mentions = 0;
  double pct_words_in_mentions = 0;

  double mean_chars_per_message = 0, sd_chars_per_message = 0;
  double mean_chars_per_mention = 0, sd_chars_per_mention = 0;
  double mean_words_per_message = 0, sd_words_per_message = 0;
  double mean_words_per_mention = 0, sd_words_per_mention = 0;
};

// Maximal runs of non-whitespace scalars.
std::size_t count_words(std::u32string_view text);

StatsReport compute_stats(const Corpus& corpus);

// Rounds half away from zero at `decimals` places.
double round_half_up(double value, int decimals);

std::string format_stats_table(const StatsReport& stats, std::string_view dataset_id);
std::string stats_to_json(const StatsReport& stats, std::string_view dataset_id);

}  // namespace mdvg
