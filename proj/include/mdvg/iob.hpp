#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mdvg/corpus.hpp"
#include "mdvg/metrics.hpp"
#include "mdvg/samples.hpp"

namespace mdvg {

struct ViewToken {
  std::string text;
  std::size_t start = 0;  // scalar offsets into the utterance
  std::size_t end = 0;
};

struct TokenizationView {
  std::vector<ViewToken> tokens;
};

enum class IobLabel { B, I, O, Ignore };

std::string_view to_string(IobLabel label);
IobLabel parse_iob_label(std::string_view s);  // throws MalformedFile

// How a token that only partly covers a span is labeled.
enum class OverlapPolicy {
  AnyOverlap,       // any shared character puts the token in the span
  FullContainment,  // the whole token must lie inside the span
};

// Maximal runs of non-whitespace.
TokenizationView whitespace_view(std::string_view text);

// Builds a view from scalar offset pairs; token text is taken from `text`.
TokenizationView view_from_offsets(std::string_view text, const std::vector<std::pair<std::size_t, std::size_t>>& offsets);

// Throws ViewMismatch unless tokens are in bounds, ordered, disjoint and their
// text equals the covered substring.
void check_view(const TokenizationView& view, std::string_view text);

std::vector<IobLabel> to_iob(const Utterance& utterance, const TokenizationView& view,
                             OverlapPolicy policy = OverlapPolicy::AnyOverlap);

struct IobDecoding {
  std::vector<MentionSpan> spans;
  std::size_t repairs = 0;  // I tags with no preceding B/I, each opened a span
};

// B(I)* runs become spans from the first token's start to the last token's
// end. Ignore labels decode like O.
IobDecoding from_iob(const std::vector<IobLabel>& labels, const TokenizationView& view);

struct LabeledSequence {
  std::vector<ViewToken> tokens;
  std::vector<int> utterance_of_token;  // 1-based utterance index per token
  std::vector<IobLabel> labels;
  std::size_t target_begin = 0, target_end = 0;  // token index range of the target
};

// `views[i]` tokenizes utterance i + 1. History tokens are labeled Ignore.
LabeledSequence build_labeled_window(const Dialogue& dialogue, int index, WindowSpec spec,
                                     const std::vector<TokenizationView>& views,
                                     OverlapPolicy policy = OverlapPolicy::AnyOverlap);

// One block per window: a "# dialogue_id=... index=... target_start=..."
// header, then "token<TAB>start<TAB>end<TAB>label" lines, then a blank line.
std::string format_conll_block(const std::string& dialogue_id, int index, const LabeledSequence& seq);

struct IobImport {
  PredictionSet predictions;
  std::size_t repairs = 0;
};

// Reads blocks in the export format (labels may come from an external
// tagger) and decodes the target tokens of each block into spans.
IobImport import_conll(std::string_view text, const Corpus& corpus);

// Per-utterance views from JSONL {"dialogue_id","index","tokens":[[start,end],...]}.
std::map<UtteranceKey, TokenizationView> load_views(const std::filesystem::path& path, const Corpus& corpus);

}  // namespace mdvg
