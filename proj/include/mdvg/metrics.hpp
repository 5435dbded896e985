#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mdvg/corpus.hpp"

namespace mdvg {

struct UtteranceKey {
  std::string dialogue_id;
  int index = 0;

  auto operator<=>(const UtteranceKey&) const = default;
};

struct UtterancePrediction {
  std::vector<MentionSpan> spans;
  std::optional<std::string> parse_error;  // set when the model output could not be parsed

  bool operator==(const UtterancePrediction&) const = default;
};

using PredictionSet = std::map<UtteranceKey, UtterancePrediction>;

PredictionSet gold_from_corpus(const Corpus& corpus);

// Gold restricted to `keys`; throws KeyMismatch if a key is not in the corpus.
PredictionSet gold_for_keys(const Corpus& corpus, const PredictionSet& keys);

// Prediction file: JSONL {"dialogue_id","index","spans":[{"start","end"}],"parse_error":str|null}.
// Keys must exist in `corpus` and be unique (KeyMismatch); spans must be valid
// against the utterance text (InvalidPrediction).
PredictionSet load_predictions(const std::filesystem::path& path, const Corpus& corpus);
PredictionSet parse_predictions(std::string_view jsonl, const Corpus& corpus);
std::string serialize_predictions(const PredictionSet& preds);
void save_predictions(const PredictionSet& preds, const std::filesystem::path& path);

struct PrfResult {
  double precision = 0, recall = 0, f1 = 0;
  std::size_t tp = 0, fp = 0, fn = 0;
};

// Exact (start, end) matching per utterance, micro-aggregated.
PrfResult exact_prf(const PredictionSet& gold, const PredictionSet& pred);

using Assignment = std::vector<std::pair<std::size_t, std::size_t>>;  // (gold index, pred index)

std::size_t overlap(const MentionSpan& a, const MentionSpan& b);

// One-to-one matching maximizing total character overlap; zero-overlap pairs
// are never matched. Both lists must be sorted and non-overlapping. Among
// optimal matchings the one choosing, gold by gold, the lowest pred index
// (unmatched last) wins.
Assignment optimal_assignment(const std::vector<MentionSpan>& gold, const std::vector<MentionSpan>& pred);

struct JaccardResult {
  double jaccard = 0;        // micro over spans
  double jaccard_macro = 0;  // mean over utterances with any gold or predicted span
  std::size_t matched_pairs = 0, unmatched_gold = 0, unmatched_pred = 0;
  std::size_t assigned_overlap = 0;  // total characters shared by matched pairs
};

JaccardResult jaccard_score(const PredictionSet& gold, const PredictionSet& pred);

struct ErrorBreakdown {
  std::size_t exact = 0, boundary_partial = 0, split = 0, merge = 0, spurious = 0, missed = 0;

  bool operator==(const ErrorBreakdown&) const = default;
};

ErrorBreakdown categorize_errors(const PredictionSet& gold, const PredictionSet& pred);

struct EvalReport {
  PrfResult prf;
  JaccardResult jaccard;
  ErrorBreakdown errors;
  std::size_t n_utterances = 0;
  std::size_t n_gold = 0, n_pred = 0;
  std::size_t unparseable = 0;
};

// Throws KeyMismatch unless gold and pred have identical key sets.
EvalReport evaluate(const PredictionSet& gold, const PredictionSet& pred);

std::string report_to_json(const EvalReport& r);
std::string format_report_table(const EvalReport& r);

}  // namespace mdvg
