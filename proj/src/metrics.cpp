#include "mdvg/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mdvg/error.hpp"
#include "mdvg/utf8.hpp"

namespace mdvg {

using nlohmann::json;
using nlohmann::ordered_json;

PredictionSet gold_from_corpus(const Corpus& corpus) {
  PredictionSet out;
  for (const auto& d : corpus.dialogues)
    for (const auto& u : d.utterances) out[{d.dialogue_id, u.index}] = {u.mentions, std::nullopt};
  return out;
}

namespace {

const Utterance* find_utterance(const Corpus& corpus, const UtteranceKey& key) {
  const Dialogue* d = corpus.find(key.dialogue_id);
  if (d == nullptr || key.index < 1 || static_cast<std::size_t>(key.index) > d->utterances.size()) return nullptr;
  return &d->utterances[key.index - 1];
}

std::string key_name(const UtteranceKey& k) { return "(" + k.dialogue_id + ", " + std::to_string(k.index) + ")"; }

void require_same_keys(const PredictionSet& gold, const PredictionSet& pred) {
  auto g = gold.begin();
  auto p = pred.begin();
  for (; g != gold.end() && p != pred.end(); ++g, ++p)
    if (g->first != p->first)
      throw Error(ErrorCode::KeyMismatch, "gold key " + key_name(g->first) + " vs prediction key " + key_name(p->first));
  if (g != gold.end()) throw Error(ErrorCode::KeyMismatch, "no prediction for " + key_name(g->first));
  if (p != pred.end()) throw Error(ErrorCode::KeyMismatch, "prediction for unknown utterance " + key_name(p->first));
}

const std::vector<MentionSpan>& predicted_spans(const UtterancePrediction& p) {
  static const std::vector<MentionSpan> kNone;
  return p.parse_error ? kNone : p.spans;
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

PredictionSet gold_for_keys(const Corpus& corpus, const PredictionSet& keys) {
  PredictionSet out;
  for (const auto& [key, unused] : keys) {
    const Utterance* u = find_utterance(corpus, key);
    if (u == nullptr) throw Error(ErrorCode::KeyMismatch, "prediction for unknown utterance " + key_name(key));
    out[key] = {u->mentions, std::nullopt};
  }
  return out;
}

PredictionSet parse_predictions(std::string_view jsonl, const Corpus& corpus) {
  PredictionSet out;
  std::size_t line_no = 0;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "predictions line " + std::to_string(line_no);
    UtteranceKey key;
    UtterancePrediction pred;
    try {
      const json j = json::parse(line);
      key.dialogue_id = j.at("dialogue_id").get<std::string>();
      key.index = j.at("index").get<int>();
      for (const auto& s : j.at("spans")) pred.spans.push_back({s.at("start").get<std::size_t>(), s.at("end").get<std::size_t>()});
      if (auto it = j.find("parse_error"); it != j.end() && !it->is_null()) pred.parse_error = it->get<std::string>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedFile, where + ": " + e.what());
    }
    const Utterance* u = find_utterance(corpus, key);
    if (u == nullptr) throw Error(ErrorCode::KeyMismatch, where + ": unknown utterance " + key_name(key));
    if (auto v = validate_spans(pred.spans, utf8::length(u->text), key.dialogue_id, key.index); !v.empty())
      throw Error(ErrorCode::InvalidPrediction, where + ": " + v.front().describe());
    if (!out.emplace(key, std::move(pred)).second)
      throw Error(ErrorCode::KeyMismatch, where + ": duplicate prediction for " + key_name(key));
  }
  return out;
}

PredictionSet load_predictions(const std::filesystem::path& path, const Corpus& corpus) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_predictions(buf.str(), corpus);
}

std::string serialize_predictions(const PredictionSet& preds) {
  std::string out;
  for (const auto& [key, p] : preds) {
    ordered_json j;
    j["dialogue_id"] = key.dialogue_id;
    j["index"] = key.index;
    j["spans"] = ordered_json::array();
    for (const auto& s : p.spans) j["spans"].push_back({{"start", s.start}, {"end", s.end}});
    j["parse_error"] = p.parse_error ? ordered_json(*p.parse_error) : ordered_json(nullptr);
    out += j.dump();
    out += '\n';
  }
  return out;
}

void save_predictions(const PredictionSet& preds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << serialize_predictions(preds);
}

PrfResult exact_prf(const PredictionSet& gold, const PredictionSet& pred) {
  require_same_keys(gold, pred);
  PrfResult r;
  for (const auto& [key, g] : gold) {
    const auto& ps = predicted_spans(pred.at(key));
    std::size_t hits = 0;
    for (const auto& s : ps)
      if (std::binary_search(g.spans.begin(), g.spans.end(), s)) ++hits;
    r.tp += hits;
    r.fp += ps.size() - hits;
    r.fn += g.spans.size() - hits;
  }
  if (r.tp + r.fp + r.fn == 0) {
    r.precision = r.recall = r.f1 = 1.0;
    return r;
  }
  r.precision = ratio(r.tp, r.tp + r.fp);
  r.recall = ratio(r.tp, r.tp + r.fn);
  r.f1 = r.precision + r.recall > 0 ? 2 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

std::size_t overlap(const MentionSpan& a, const MentionSpan& b) {
  const std::size_t lo = std::max(a.start, b.start);
  const std::size_t hi = std::min(a.end, b.end);
  return hi > lo ? hi - lo : 0;
}

Assignment optimal_assignment(const std::vector<MentionSpan>& gold, const std::vector<MentionSpan>& pred) {
  // With both sides sorted and disjoint, gold i overlaps a contiguous run of
  // preds [lo_i, hi_i), runs are monotone, and a pred used by an earlier gold
  // can only be lo_i. So the state "last pred used" is enough for an exact DP.
  const std::size_t n = gold.size();
  const std::size_t m = pred.size();
  std::vector<std::size_t> lo(n), hi(n);
  for (std::size_t i = 0, j = 0; i < n; ++i) {
    while (j < m && pred[j].end <= gold[i].start) ++j;
    lo[i] = j;
    std::size_t k = j;
    while (k < m && pred[k].start < gold[i].end) ++k;
    hi[i] = k;
  }

  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  constexpr long long kUnknown = -1;
  // best[i][last + 1]: max overlap for golds i.. given the last pred used.
  std::vector<std::vector<long long>> best(n + 1, std::vector<long long>(m + 1, kUnknown));
  auto solve = [&](auto&& self, std::size_t i, std::size_t last) -> long long {
    if (i == n) return 0;
    long long& memo = best[i][last == kNone ? 0 : last + 1];
    if (memo != kUnknown) return memo;
    long long value = self(self, i + 1, last);
    for (std::size_t j = lo[i]; j < hi[i]; ++j) {
      if (j == last) continue;
      const auto w = static_cast<long long>(overlap(gold[i], pred[j]));
      if (w > 0) value = std::max(value, w + self(self, i + 1, j));
    }
    return memo = value;
  };

  Assignment out;
  std::size_t last = kNone;
  for (std::size_t i = 0; i < n; ++i) {
    const long long target = solve(solve, i, last);
    bool matched = false;
    for (std::size_t j = lo[i]; j < hi[i] && !matched; ++j) {
      if (j == last) continue;
      const auto w = static_cast<long long>(overlap(gold[i], pred[j]));
      if (w > 0 && w + solve(solve, i + 1, j) == target) {
        out.emplace_back(i, j);
        last = j;
        matched = true;
      }
    }
  }
  return out;
}

JaccardResult jaccard_score(const PredictionSet& gold, const PredictionSet& pred) {
  require_same_keys(gold, pred);
  JaccardResult r;
  double total = 0;
  double macro_total = 0;
  std::size_t macro_count = 0;
  for (const auto& [key, g] : gold) {
    const auto& ps = predicted_spans(pred.at(key));
    const Assignment pairs = optimal_assignment(g.spans, ps);
    double contribution = 0;
    for (const auto& [gi, pi] : pairs) {
      const std::size_t inter = overlap(g.spans[gi], ps[pi]);
      const std::size_t uni = g.spans[gi].length() + ps[pi].length() - inter;
      contribution += static_cast<double>(inter) / static_cast<double>(uni);
      r.assigned_overlap += inter;
    }
    const std::size_t count = pairs.size() + (g.spans.size() - pairs.size()) + (ps.size() - pairs.size());
    r.matched_pairs += pairs.size();
    r.unmatched_gold += g.spans.size() - pairs.size();
    r.unmatched_pred += ps.size() - pairs.size();
    total += contribution;
    if (count > 0) {
      macro_total += contribution / static_cast<double>(count);
      ++macro_count;
    }
  }
  const std::size_t denom = r.matched_pairs + r.unmatched_gold + r.unmatched_pred;
  r.jaccard = denom == 0 ? 1.0 : total / static_cast<double>(denom);
  r.jaccard_macro = macro_count == 0 ? 1.0 : macro_total / static_cast<double>(macro_count);
  return r;
}

ErrorBreakdown categorize_errors(const PredictionSet& gold, const PredictionSet& pred) {
  require_same_keys(gold, pred);
  ErrorBreakdown e;
  for (const auto& [key, g] : gold) {
    const auto& gs = g.spans;
    const auto& ps = predicted_spans(pred.at(key));
    std::vector<std::vector<std::size_t>> gold_hits(gs.size()), pred_hits(ps.size());
    for (std::size_t i = 0; i < gs.size(); ++i)
      for (std::size_t j = 0; j < ps.size(); ++j)
        if (overlap(gs[i], ps[j]) > 0) {
          gold_hits[i].push_back(j);
          pred_hits[j].push_back(i);
        }
    std::set<std::size_t> merging_preds;
    for (std::size_t i = 0; i < gs.size(); ++i) {
      const auto& hits = gold_hits[i];
      if (hits.empty()) {
        ++e.missed;
      } else if (hits.size() >= 2) {
        ++e.split;
      } else if (pred_hits[hits[0]].size() >= 2) {
        merging_preds.insert(hits[0]);
      } else if (gs[i] == ps[hits[0]]) {
        ++e.exact;
      } else {
        ++e.boundary_partial;
      }
    }
    for (std::size_t j = 0; j < ps.size(); ++j) {
      if (pred_hits[j].empty()) ++e.spurious;
      else if (pred_hits[j].size() >= 2) merging_preds.insert(j);
    }
    e.merge += merging_preds.size();
  }
  return e;
}

EvalReport evaluate(const PredictionSet& gold, const PredictionSet& pred) {
  EvalReport r;
  r.prf = exact_prf(gold, pred);
  r.jaccard = jaccard_score(gold, pred);
  r.errors = categorize_errors(gold, pred);
  r.n_utterances = gold.size();
  for (const auto& [key, g] : gold) r.n_gold += g.spans.size();
  for (const auto& [key, p] : pred) {
    r.n_pred += predicted_spans(p).size();
    if (p.parse_error) ++r.unparseable;
  }
  return r;
}

std::string report_to_json(const EvalReport& r) {
  ordered_json j;
  j["precision"] = r.prf.precision;
  j["recall"] = r.prf.recall;
  j["f1"] = r.prf.f1;
  j["jaccard"] = r.jaccard.jaccard;
  j["jaccard_macro"] = r.jaccard.jaccard_macro;
  j["counts"] = {{"utterances", r.n_utterances},
                 {"gold_spans", r.n_gold},
                 {"predicted_spans", r.n_pred},
                 {"tp", r.prf.tp},
                 {"fp", r.prf.fp},
                 {"fn", r.prf.fn},
                 {"matched_pairs", r.jaccard.matched_pairs},
                 {"unmatched_gold", r.jaccard.unmatched_gold},
                 {"unmatched_pred", r.jaccard.unmatched_pred},
                 {"unparseable", r.unparseable}};
  j["error_breakdown"] = {{"exact", r.errors.exact},       {"boundary_partial", r.errors.boundary_partial},
                          {"split", r.errors.split},       {"merge", r.errors.merge},
                          {"spurious", r.errors.spurious}, {"missed", r.errors.missed}};
  return j.dump(2) + "\n";
}

std::string format_report_table(const EvalReport& r) {
  auto row = [](const char* name, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-10s %.3f\n", name, v);
    return std::string(buf);
  };
  auto count = [](const char* name, std::size_t v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-18s %zu\n", name, v);
    return std::string(buf);
  };
  std::string out;
  out += row("P", r.prf.precision);
  out += row("R", r.prf.recall);
  out += row("F1", r.prf.f1);
  out += row("J", r.jaccard.jaccard);
  out += row("J (macro)", r.jaccard.jaccard_macro);
  out += "\n";
  out += count("utterances", r.n_utterances);
  out += count("gold spans", r.n_gold);
  out += count("predicted spans", r.n_pred);
  out += count("unparseable", r.unparseable);
  out += "\n";
  out += count("exact", r.errors.exact);
  out += count("boundary_partial", r.errors.boundary_partial);
  out += count("split", r.errors.split);
  out += count("merge", r.errors.merge);
  out += count("spurious", r.errors.spurious);
  out += count("missed", r.errors.missed);
  return out;
}

}  // namespace mdvg
