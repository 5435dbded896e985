#pragma once

// Exhaustive one-to-one matching search.

#include <algorithm>
#include <vector>

#include "mdvg/corpus.hpp"

namespace oracle {

inline std::size_t intersection(const mdvg::MentionSpan& a, const mdvg::MentionSpan& b) {
  const auto lo = std::max(a.start, b.start), hi = std::min(a.end, b.end);
  return hi > lo ? hi - lo : 0;
}

inline void best_matching(const std::vector<mdvg::MentionSpan>& gold, const std::vector<mdvg::MentionSpan>& pred,
                          std::size_t g, std::vector<bool>& used, std::size_t total, std::size_t& best) {
  if (g == gold.size()) {
    best = std::max(best, total);
    return;
  }
  best_matching(gold, pred, g + 1, used, total, best);
  for (std::size_t p = 0; p < pred.size(); ++p) {
    if (used[p]) continue;
    const std::size_t ov = intersection(gold[g], pred[p]);
    if (ov == 0) continue;
    used[p] = true;
    best_matching(gold, pred, g + 1, used, total + ov, best);
    used[p] = false;
  }
}

// Maximum total intersection over all partial one-to-one matchings.
inline std::size_t max_total_overlap(const std::vector<mdvg::MentionSpan>& gold,
                                     const std::vector<mdvg::MentionSpan>& pred) {
  std::vector<bool> used(pred.size(), false);
  std::size_t best = 0;
  best_matching(gold, pred, 0, used, 0, best);
  return best;
}

}  // namespace oracle
