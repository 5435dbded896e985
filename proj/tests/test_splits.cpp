#include <algorithm>

#include "doctest.h"
#include "mdvg/error.hpp"
#include "mdvg/splits.hpp"
#include "support.hpp"

using namespace mdvg;

namespace {

std::vector<std::string> ids_of(const Corpus& c) {
  std::vector<std::string> ids;
  for (const auto& d : c.dialogues) ids.push_back(d.dialogue_id);
  return ids;
}

Corpus numbered(int n) {
  Corpus c{"n", {}};
  for (int i = 0; i < n; ++i)
    c.dialogues.push_back({"dlg-" + std::to_string(i), "s", std::nullopt, {{1, Speaker::A, "x", {}}}});
  return c;
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::BadRequest;
}

}  // namespace

TEST_CASE("category folds") {
  const Corpus c = load_corpus(support::fixture("agos_mini.json"));
  const auto folds = agos_folds(c);
  REQUIRE(folds.size() == 5);
  std::vector<std::string> all_test;
  for (std::size_t i = 0; i < folds.size(); ++i) {
    CHECK(folds[i].fold_id == agos_categories()[i]);
    CHECK(folds[i].test.size() == 3);
    CHECK(folds[i].train.size() == 12);
    CHECK_NOTHROW(check_partition(folds[i], ids_of(c)));
    for (const auto& id : folds[i].test) CHECK(id.starts_with(folds[i].fold_id));
    all_test.insert(all_test.end(), folds[i].test.begin(), folds[i].test.end());
  }
  std::sort(all_test.begin(), all_test.end());
  auto ids = ids_of(c);
  std::sort(ids.begin(), ids.end());
  CHECK(all_test == ids);
}

TEST_CASE("category fold errors") {
  Corpus c = load_corpus(support::fixture("agos_mini.json"));
  Corpus missing = c;
  std::erase_if(missing.dialogues, [](const Dialogue& d) { return d.category == "phones"; });
  CHECK(code_of([&] { agos_folds(missing); }) == ErrorCode::MissingCategory);
  Corpus unknown = c;
  unknown.dialogues[0].category = "boats";
  CHECK(code_of([&] { agos_folds(unknown); }) == ErrorCode::UnknownCategory);
  Corpus none = c;
  none.dialogues[0].category.reset();
  CHECK(code_of([&] { agos_folds(none); }) == ErrorCode::UnknownCategory);
}

TEST_CASE("random folds") {
  const Corpus fifty = numbered(50);
  const auto a = random_folds(fifty, 5, 7);
  REQUIRE(a.size() == 5);
  for (const auto& f : a) {
    CHECK(f.test.size() == 10);
    CHECK_NOTHROW(check_partition(f, ids_of(fifty)));
    CHECK(std::is_sorted(f.train.begin(), f.train.end()));
  }
  CHECK(random_folds(fifty, 5, 7) == a);
  CHECK(random_folds(fifty, 5, 8) != a);
  CHECK(a[0].fold_id == "fold-1");
  const auto uneven = random_folds(numbered(12), 5, 1);
  std::vector<std::size_t> sizes;
  for (const auto& f : uneven) sizes.push_back(f.test.size());
  CHECK(sizes == std::vector<std::size_t>{3, 3, 2, 2, 2});
  CHECK(code_of([&] { random_folds(fifty, 51, 7); }) == ErrorCode::BadK);
  CHECK(code_of([&] { random_folds(fifty, 1, 7); }) == ErrorCode::BadK);
  // membership depends only on the id set, not corpus order
  Corpus shuffled = fifty;
  std::reverse(shuffled.dialogues.begin(), shuffled.dialogues.end());
  CHECK(random_folds(shuffled, 5, 7) == a);
}

TEST_CASE("random folds follow the documented shuffle") {
  // the generator is the standard one: 10000th output of the default seed
  std::mt19937_64 check;
  check.discard(9999);
  CHECK(check() == 9981545732273789042ull);

  const Corpus c = numbered(13);
  auto ids = ids_of(c);
  std::sort(ids.begin(), ids.end());
  std::mt19937_64 rng(2024);
  for (std::size_t i = ids.size() - 1; i > 0; --i) {
    const std::uint64_t bound = i + 1, limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do x = rng();
    while (x >= limit);
    std::swap(ids[i], ids[x % bound]);
  }
  const auto folds = random_folds(c, 4, 2024);
  std::vector<std::string> tests;
  for (const auto& f : folds) tests.insert(tests.end(), f.test.begin(), f.test.end());
  CHECK(tests == ids);
  CHECK(folds[0].test.size() == 4);
  CHECK(folds[3].test.size() == 3);
}

TEST_CASE("transfer") {
  const Corpus agos = load_corpus(support::fixture("agos_mini.json"));
  const Corpus pb = load_corpus(support::fixture("pb_mini.json"));
  const FoldSpec f = transfer_config(agos, pb);
  CHECK(f.train.size() == 15);
  CHECK(f.test.size() == 12);
  CHECK(f.fold_id == "agos-mini->pb-mini");
  CHECK(transfer_config(pb, agos).train.size() == 12);
  CHECK(code_of([&] { transfer_config(agos, agos); }) == ErrorCode::SameDataset);
}

TEST_CASE("partition checks") {
  const std::vector<std::string> ids{"a", "b", "c"};
  CHECK_NOTHROW(check_partition({"f", {"a", "b"}, {"c"}}, ids));
  CHECK_THROWS_AS(check_partition({"f", {"a", "b"}, {"b", "c"}}, ids), Error);
  CHECK_THROWS_AS(check_partition({"f", {"a"}, {"c"}}, ids), Error);
  CHECK_THROWS_AS(check_partition({"f", {"a", "b", "z"}, {"c"}}, ids), Error);
}

TEST_CASE("manifest round trip") {
  FoldManifest m{random_folds(numbered(10), 5, 3), 3};
  const FoldManifest back = manifest_from_json(manifest_to_json(m));
  CHECK(back.folds == m.folds);
  CHECK(back.seed == std::optional<std::uint64_t>{3});
  FoldManifest none{agos_folds(load_corpus(support::fixture("agos_mini.json"))), std::nullopt};
  CHECK(manifest_to_json(none).find("\"seed\": null") != std::string::npos);
  CHECK_THROWS_AS(manifest_from_json("{}"), Error);
}
