#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mdvg/corpus.hpp"
#include "mdvg/metrics.hpp"

namespace mdvg {

struct ParseTree {
  std::string label;
  std::vector<ParseTree> children;
  // Set on preterminals: the token and its scalar offsets in the utterance.
  std::optional<std::string> word;
  std::size_t start = 0, end = 0;  // extent; start == end for nodes without leaves

  bool is_leaf() const { return word.has_value(); }
};

// Reads a Penn-Treebank style bracketing and aligns its leaves to
// `utterance` left to right, skipping whitespace and undoing the usual
// bracket/quote escapes (-LRB-, ``, ...).
// Errors: UnbalancedBrackets, LeafAlignmentFailure.
ParseTree parse_ptb(std::string_view bracketed, std::string_view utterance);

// NP nodes with no NP ancestor, left to right. Functional tags (NP-SBJ) count as NP.
std::vector<MentionSpan> extract_maximal_nps(const ParseTree& tree);

const std::set<std::string>& default_pronoun_stoplist();

// Drops spans whose trimmed, lower-cased text is in `stoplist`.
std::vector<MentionSpan> filter_pronouns(const std::vector<MentionSpan>& spans, std::string_view utterance,
                                         const std::set<std::string>& stoplist = default_pronoun_stoplist());

struct NpBaselineResult {
  PredictionSet predictions;
  std::size_t failed_trees = 0;  // recorded with parse_error set
};

// Input: JSONL {"dialogue_id","index","tree"}. One prediction per record.
NpBaselineResult run_np_baseline(std::string_view trees_jsonl, const Corpus& corpus,
                                 const std::set<std::string>& stoplist = default_pronoun_stoplist());

}  // namespace mdvg
