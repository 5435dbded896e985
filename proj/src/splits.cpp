#include "mdvg/splits.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <set>

#include "json.hpp"
#include "mdvg/error.hpp"

namespace mdvg {
namespace {

std::vector<std::string> ids_of(const Corpus& corpus) {
  std::vector<std::string> ids;
  for (const auto& d : corpus.dialogues) ids.push_back(d.dialogue_id);
  return ids;
}

FoldSpec make_fold(std::string fold_id, const std::vector<std::string>& all, const std::set<std::string>& test) {
  FoldSpec f{std::move(fold_id), {}, {}};
  for (const auto& id : all) (test.contains(id) ? f.test : f.train).push_back(id);
  return f;
}

// Uniform draw in [0, bound) by rejection, so results do not depend on the
// standard library's distribution implementation.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do x = rng();
  while (x >= limit);
  return x % bound;
}

}  // namespace

std::vector<FoldSpec> agos_folds(const Corpus& corpus) {
  const auto& categories = agos_categories();
  std::vector<std::set<std::string>> by_category(categories.size());
  for (const auto& d : corpus.dialogues) {
    if (!d.category) throw Error(ErrorCode::UnknownCategory, "dialogue '" + d.dialogue_id + "' has no category");
    auto it = std::find(categories.begin(), categories.end(), *d.category);
    if (it == categories.end())
      throw Error(ErrorCode::UnknownCategory, "dialogue '" + d.dialogue_id + "' has category '" + *d.category + "'");
    by_category[it - categories.begin()].insert(d.dialogue_id);
  }
  const auto all = ids_of(corpus);
  std::vector<FoldSpec> folds;
  for (std::size_t c = 0; c < categories.size(); ++c) {
    if (by_category[c].empty())
      throw Error(ErrorCode::MissingCategory, "no dialogues for category '" + categories[c] + "'");
    folds.push_back(make_fold(categories[c], all, by_category[c]));
  }
  return folds;
}

std::vector<FoldSpec> random_folds(const Corpus& corpus, int k, std::uint64_t seed) {
  auto ids = ids_of(corpus);
  if (k < 2 || static_cast<std::size_t>(k) > ids.size())
    throw Error(ErrorCode::BadK, "k=" + std::to_string(k) + " with " + std::to_string(ids.size()) + " dialogues");
  std::sort(ids.begin(), ids.end());
  const auto sorted = ids;
  std::mt19937_64 rng(seed);
  for (std::size_t i = ids.size() - 1; i > 0; --i) std::swap(ids[i], ids[bounded(rng, i + 1)]);

  std::vector<FoldSpec> folds;
  const std::size_t n = ids.size();
  std::size_t at = 0;
  for (int f = 0; f < k; ++f) {
    const std::size_t size = n / k + (static_cast<std::size_t>(f) < n % k ? 1 : 0);
    std::set<std::string> test(ids.begin() + at, ids.begin() + at + size);
    at += size;
    folds.push_back(make_fold("fold-" + std::to_string(f + 1), sorted, test));
    // keep the shuffled order inside the test list
    folds.back().test.assign(ids.begin() + (at - size), ids.begin() + at);
  }
  return folds;
}

FoldSpec transfer_config(const Corpus& train_corpus, const Corpus& test_corpus) {
  if (train_corpus.dataset_id == test_corpus.dataset_id)
    throw Error(ErrorCode::SameDataset, "both corpora are '" + train_corpus.dataset_id + "'");
  return {train_corpus.dataset_id + "->" + test_corpus.dataset_id, ids_of(train_corpus), ids_of(test_corpus)};
}

void check_partition(const FoldSpec& fold, const std::vector<std::string>& ids) {
  std::multiset<std::string> seen(fold.train.begin(), fold.train.end());
  seen.insert(fold.test.begin(), fold.test.end());
  const std::multiset<std::string> expected(ids.begin(), ids.end());
  if (seen != expected)
    throw Error(ErrorCode::InvariantViolation, "fold '" + fold.fold_id + "' is not a partition of the corpus");
}

std::string manifest_to_json(const FoldManifest& manifest) {
  nlohmann::ordered_json j;
  j["folds"] = nlohmann::ordered_json::array();
  for (const auto& f : manifest.folds)
    j["folds"].push_back({{"fold_id", f.fold_id}, {"train", f.train}, {"test", f.test}});
  j["seed"] = manifest.seed ? nlohmann::ordered_json(*manifest.seed) : nlohmann::ordered_json(nullptr);
  return j.dump(2) + "\n";
}

FoldManifest manifest_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    FoldManifest m;
    for (const auto& f : j.at("folds"))
      m.folds.push_back({f.at("fold_id").get<std::string>(), f.at("train").get<std::vector<std::string>>(),
                         f.at("test").get<std::vector<std::string>>()});
    if (!j.at("seed").is_null()) m.seed = j.at("seed").get<std::uint64_t>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedFile, std::string("fold manifest: ") + e.what());
  }
}

}  // namespace mdvg
