#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mdvg/corpus.hpp"

namespace mdvg {

struct FoldSpec {
  std::string fold_id;
  std::vector<std::string> train;
  std::vector<std::string> test;

  bool operator==(const FoldSpec&) const = default;
};

struct FoldManifest {
  std::vector<FoldSpec> folds;
  std::optional<std::uint64_t> seed;
};

inline const std::vector<std::string>& agos_categories() {
  static const std::vector<std::string> kCategories = {"cars", "dogs", "paintings", "pastries", "phones"};
  return kCategories;
}

// One fold per image category; that category's dialogues form the test set.
// Errors: UnknownCategory, MissingCategory.
std::vector<FoldSpec> agos_folds(const Corpus& corpus);

// Sorts dialogue ids, shuffles them with Fisher-Yates driven by
// std::mt19937_64(seed), then cuts k contiguous test chunks whose sizes differ
// by at most one (larger chunks first). Error: BadK.
std::vector<FoldSpec> random_folds(const Corpus& corpus, int k, std::uint64_t seed);

// Train on all of one corpus, test on all of the other. Error: SameDataset.
FoldSpec transfer_config(const Corpus& train_corpus, const Corpus& test_corpus);

// Throws InvariantViolation unless train and test are disjoint and cover `ids` exactly.
void check_partition(const FoldSpec& fold, const std::vector<std::string>& ids);

std::string manifest_to_json(const FoldManifest& manifest);
FoldManifest manifest_from_json(std::string_view text);

}  // namespace mdvg
