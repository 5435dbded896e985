#include <cstdlib>
#include <sstream>
#include <sys/wait.h>

#include "doctest.h"
#include "json.hpp"
#include "mdvg/commands.hpp"
#include "mdvg/samples.hpp"
#include "support.hpp"

using namespace mdvg;
using namespace mdvg::cli;
using nlohmann::json;
using support::fixture;
using support::slurp;
using support::spit;
using support::TempDir;

namespace {

struct Capture {
  std::ostringstream out, err;
  Streams io() { return {out, err}; }
};

// Generations file carrying the gold completions of every sample.
void write_gold_generations(const fs::path& samples, const fs::path& dest) {
  std::string out;
  for (const auto& s : import_jsonl(samples))
    out += json{{"dialogue_id", s.dialogue_id}, {"index", s.utterance_index}, {"completion", s.completion}}.dump() +
           "\n";
  spit(dest, out);
}

json manifest_without_timestamp(const fs::path& dir) {
  json m = json::parse(slurp(dir / "manifest.json"));
  m.erase("timestamp");
  return m;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MDVG_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::size_t count_files(const fs::path& dir, const std::string& name) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir)) n += e.path().filename() == name;
  return n;
}

}  // namespace

TEST_CASE("stats prints the table and writes json") {
  TempDir tmp;
  Capture c;
  REQUIRE(cmd_stats(fixture("tiny.json"), tmp.path, c.io()) == kExitOk);
  CHECK(c.out.str().find("66.67%") != std::string::npos);
  const json j = json::parse(slurp(tmp / "stats.json"));
  CHECK(j["n_mentions"] == 5);
  CHECK(count_files(tmp.path, "manifest.json") == 1);
  CHECK(slurp(tmp / "stats.txt") == c.out.str());
}

TEST_CASE("malformed corpus exits with a validation code") {
  TempDir tmp;
  spit(tmp / "bad.json", "{\"dataset_id\": \"x\", \"dialogues\": [");
  Capture c;
  CHECK(cmd_stats(tmp / "bad.json", std::nullopt, c.io()) == kExitValidation);
  CHECK(c.err.str().find("MalformedFile") != std::string::npos);
  CHECK(c.out.str().empty());
  CHECK(cmd_stats(tmp / "missing.json", std::nullopt, c.io()) == kExitValidation);
}

TEST_CASE("negative window is a usage error") {
  TempDir tmp;
  Capture c;
  CHECK(cmd_build_samples(fixture("tiny.json"), -1, tmp / "out", MarkerConfig{}, c.io()) == kExitValidation);
  CHECK(cmd_export_iob(fixture("tiny.json"), -1, std::nullopt, OverlapPolicy::AnyOverlap, tmp / "iob", c.io()) ==
        kExitValidation);
  CHECK_FALSE(fs::exists(tmp / "out"));
}

TEST_CASE("gold completions round-trip to perfect scores") {
  for (const int w : {0, 3, 7, 19}) {
    CAPTURE(w);
    TempDir tmp;
    Capture c;
    REQUIRE(cmd_build_samples(fixture("agos_mini.json"), w, tmp / "samples", MarkerConfig{}, c.io()) == kExitOk);
    write_gold_generations(tmp / "samples" / "samples.jsonl", tmp / "gen.jsonl");
    REQUIRE(cmd_parse_output(fixture("agos_mini.json"), tmp / "gen.jsonl", tmp / "preds", MarkerConfig{}, c.io()) ==
            kExitOk);
    REQUIRE(cmd_evaluate(fixture("agos_mini.json"), tmp / "preds" / "predictions.jsonl", tmp / "report", c.io()) ==
            kExitOk);
    const json r = json::parse(slurp(tmp / "report" / "report.json"));
    CHECK(r["precision"] == 1.0);
    CHECK(r["recall"] == 1.0);
    CHECK(r["f1"] == 1.0);
    CHECK(r["jaccard"] == 1.0);
  }
}

TEST_CASE("samples.jsonl feeds parse-output directly") {
  TempDir tmp;
  Capture c;
  REQUIRE(cmd_build_samples(fixture("tiny.json"), 3, tmp / "s", MarkerConfig{}, c.io()) == kExitOk);
  REQUIRE(cmd_parse_output(fixture("tiny.json"), tmp / "s" / "samples.jsonl", tmp / "p", MarkerConfig{}, c.io()) ==
          kExitOk);
  REQUIRE(cmd_evaluate(fixture("tiny.json"), tmp / "p" / "predictions.jsonl", tmp / "r", c.io()) == kExitOk);
  CHECK(json::parse(slurp(tmp / "r" / "report.json"))["f1"] == 1.0);
}

TEST_CASE("sorting completion parses to one span") {
  TempDir tmp;
  Capture c;
  const Sample s = build_sample(load_corpus(fixture("sorting_dialogue.json")).dialogues[0], 4, WindowSpec{3}, MarkerConfig{});
  spit(tmp / "gen.jsonl", json{{"dialogue_id", "agos-sorting-1"}, {"index", 4}, {"completion", s.completion}}.dump() + "\n");
  REQUIRE(cmd_parse_output(fixture("sorting_dialogue.json"), tmp / "gen.jsonl", tmp / "p", MarkerConfig{}, c.io()) ==
          kExitOk);
  const json p = json::parse(slurp(tmp / "p" / "predictions.jsonl"));
  CHECK(p["parse_error"].is_null());
  REQUIRE(p["spans"].size() == 1);
  CHECK(p["spans"][0] == json{{"start", 28}, {"end", 41}});
}

TEST_CASE("unbalanced generation records parse_error") {
  TempDir tmp;
  Capture c;
  spit(tmp / "gen.jsonl", R"({"dialogue_id":"d1","index":1,"completion":"A: >> the red car"})"
                          "\n"
                          R"({"dialogue_id":"d1","index":2,"completion":"B: I see >> it <<"})"
                          "\n");
  REQUIRE(cmd_parse_output(fixture("tiny.json"), tmp / "gen.jsonl", tmp / "p", MarkerConfig{}, c.io()) == kExitOk);
  std::istringstream lines(slurp(tmp / "p" / "predictions.jsonl"));
  std::string first, second;
  std::getline(lines, first);
  std::getline(lines, second);
  CHECK(json::parse(first)["parse_error"] == "UnbalancedMarkers");
  CHECK(json::parse(first)["spans"].empty());
  CHECK(json::parse(second)["parse_error"].is_null());
  CHECK(json::parse(second)["spans"][0] == json{{"start", 6}, {"end", 8}});
}

TEST_CASE("empty generations give empty predictions") {
  TempDir tmp;
  Capture c;
  spit(tmp / "gen.jsonl", "");
  REQUIRE(cmd_parse_output(fixture("tiny.json"), tmp / "gen.jsonl", tmp / "p", MarkerConfig{}, c.io()) == kExitOk);
  CHECK(slurp(tmp / "p" / "predictions.jsonl").empty());
  CHECK(count_files(tmp / "p", "manifest.json") == 1);
}

TEST_CASE("mismatched prediction keys exit with a validation code") {
  TempDir tmp;
  Capture c;
  spit(tmp / "preds.jsonl", R"({"dialogue_id":"nope","index":1,"spans":[],"parse_error":null})"
                            "\n");
  CHECK(cmd_evaluate(fixture("tiny.json"), tmp / "preds.jsonl", tmp / "r", c.io()) == kExitValidation);
  CHECK(c.err.str().find("KeyMismatch") != std::string::npos);
  spit(tmp / "gen.jsonl", R"({"dialogue_id":"d1","index":9,"completion":"x"})"
                          "\n");
  CHECK(cmd_parse_output(fixture("tiny.json"), tmp / "gen.jsonl", tmp / "p", MarkerConfig{}, c.io()) ==
        kExitValidation);
}

TEST_CASE("np baseline over-generates on the np fixture") {
  TempDir tmp;
  Capture c;
  REQUIRE(cmd_np_baseline(fixture("np_mini.json"), fixture("np_trees.jsonl"), tmp / "np", c.io()) == kExitOk);
  REQUIRE(cmd_evaluate(fixture("np_mini.json"), tmp / "np" / "predictions.jsonl", tmp / "r", c.io()) == kExitOk);
  const json r = json::parse(slurp(tmp / "r" / "report.json"));
  // hand count: 5 maximal non-pronoun NPs, 3 gold, all 3 gold found
  CHECK(r["precision"].get<double>() == doctest::Approx(0.6));
  CHECK(r["recall"] == 1.0);
  CHECK(r["precision"].get<double>() < r["recall"].get<double>());
}

TEST_CASE("np baseline records failed trees") {
  TempDir tmp;
  Capture c;
  REQUIRE(cmd_np_baseline(fixture("tiny.json"), fixture("tiny_trees.jsonl"), tmp / "np", c.io()) == kExitOk);
  CHECK(c.out.str().find("1 trees failed") != std::string::npos);
  CHECK(slurp(tmp / "np" / "predictions.jsonl").find("UnbalancedBrackets") != std::string::npos);
}

TEST_CASE("split command writes fold manifests") {
  TempDir tmp;
  Capture c;
  REQUIRE(cmd_split(fixture("agos_mini.json"), SplitMode::Agos, 5, std::nullopt, std::nullopt, tmp / "a", c.io()) ==
          kExitOk);
  const json a = json::parse(slurp(tmp / "a" / "folds.json"));
  CHECK(a["folds"].size() == 5);
  for (const auto& f : a["folds"]) CHECK(f["test"].size() == 3);

  CHECK(cmd_split(fixture("pb_mini.json"), SplitMode::Random, 5, std::nullopt, std::nullopt, tmp / "b", c.io()) ==
        kExitValidation);
  CHECK(cmd_split(fixture("pb_mini.json"), SplitMode::Random, 1, 7, std::nullopt, tmp / "b", c.io()) ==
        kExitValidation);
  REQUIRE(cmd_split(fixture("pb_mini.json"), SplitMode::Random, 5, 7, std::nullopt, tmp / "b", c.io()) == kExitOk);
  CHECK(json::parse(slurp(tmp / "b" / "folds.json"))["seed"] == 7);
  CHECK(json::parse(slurp(tmp / "b" / "manifest.json"))["seeds"] == json::array({7}));

  REQUIRE(cmd_split(fixture("agos_mini.json"), SplitMode::Transfer, 0, std::nullopt, fixture("pb_mini.json"),
                    tmp / "t", c.io()) == kExitOk);
  CHECK(json::parse(slurp(tmp / "t" / "folds.json"))["folds"].size() == 1);
  CHECK(cmd_split(fixture("agos_mini.json"), SplitMode::Transfer, 0, std::nullopt, fixture("agos_mini.json"),
                  tmp / "u", c.io()) == kExitValidation);
}

TEST_CASE("iob export and import round trip") {
  TempDir tmp;
  Capture c;
  REQUIRE(cmd_export_iob(fixture("tiny.json"), 0, std::nullopt, OverlapPolicy::AnyOverlap, tmp / "iob", c.io()) ==
          kExitOk);
  REQUIRE(cmd_import_iob(fixture("tiny.json"), tmp / "iob" / "iob.conll", tmp / "p", c.io()) == kExitOk);
  REQUIRE(cmd_evaluate(fixture("tiny.json"), tmp / "p" / "predictions.jsonl", tmp / "r", c.io()) == kExitOk);
  CHECK(json::parse(slurp(tmp / "r" / "report.json"))["f1"] == 1.0);
}

TEST_CASE("mask-serve over stdio") {
  Capture c;
  std::istringstream in("{\"op\":\"open\",\"target\":\"a\"}\n{\"op\":\"mask\",\"session\":1}\nbroken\n");
  REQUIRE(cmd_mask_serve(fixture("toy_vocab.json"), "stdio", MarkerConfig{}, in, c.io()) == kExitOk);
  CHECK(c.out.str() == "{\"session\":1}\n{\"allowed\":[0,3]}\n{\"error\":\"BadRequest\"}\n");
  std::istringstream none;
  CHECK(cmd_mask_serve(fixture("toy_vocab.json"), "udp:9", MarkerConfig{}, none, c.io()) == kExitValidation);
  CHECK(cmd_mask_serve(fixture("toy_vocab.json"), "tcp:99999", MarkerConfig{}, none, c.io()) == kExitValidation);
}

TEST_CASE("every output directory has one manifest") {
  TempDir tmp;
  Capture c;
  REQUIRE(cmd_build_samples(fixture("tiny.json"), 3, tmp / "s", MarkerConfig{}, c.io()) == kExitOk);
  const json m = json::parse(slurp(tmp / "s" / "manifest.json"));
  CHECK(m["command"] == "build-samples");
  CHECK(m["config"]["window"] == "3");
  CHECK(m["inputs"].size() == 1);
  CHECK(m["outputs"] == json::array({"samples.jsonl"}));
  CHECK(m.contains("config_digest"));
  CHECK(m.contains("tool_version"));
  CHECK(count_files(tmp / "s", "manifest.json") == 1);
  // rerunning into the same directory replaces rather than adds
  REQUIRE(cmd_build_samples(fixture("tiny.json"), 3, tmp / "s", MarkerConfig{}, c.io()) == kExitOk);
  CHECK(count_files(tmp / "s", "manifest.json") == 1);
}

TEST_CASE("commands are deterministic apart from timestamps") {
  TempDir a, b;
  Capture c;
  for (const auto* dir : {&a, &b}) {
    REQUIRE(cmd_build_samples(fixture("agos_mini.json"), 7, dir->path / "s", MarkerConfig{}, c.io()) == kExitOk);
    REQUIRE(cmd_split(fixture("pb_mini.json"), SplitMode::Random, 4, 123, std::nullopt, dir->path / "f", c.io()) ==
            kExitOk);
    REQUIRE(cmd_export_iob(fixture("agos_mini.json"), 3, std::nullopt, OverlapPolicy::AnyOverlap, dir->path / "i",
                           c.io()) == kExitOk);
    REQUIRE(cmd_stats(fixture("agos_mini.json"), dir->path / "t", c.io()) == kExitOk);
  }
  for (const auto& [sub, file] : std::vector<std::pair<std::string, std::string>>{
           {"s", "samples.jsonl"}, {"f", "folds.json"}, {"i", "iob.conll"}, {"t", "stats.json"}}) {
    CAPTURE(file);
    CHECK(slurp(a / sub / file) == slurp(b / sub / file));
    json ma = manifest_without_timestamp(a / sub), mb = manifest_without_timestamp(b / sub);
    // inputs are the same files, outputs live in different temp dirs only by path prefix
    CHECK(ma == mb);
  }
}

TEST_CASE("cli binary exit codes") {
  TempDir tmp;
  CHECK(run_cli("") == kExitValidation);
  CHECK(run_cli("no-such-command") == kExitValidation);
  CHECK(run_cli("stats " + fixture("tiny.json").string()) == kExitOk);
  CHECK(run_cli("stats " + (tmp / "missing.json").string()) == kExitValidation);
  CHECK(run_cli("build-samples " + fixture("tiny.json").string() + " --window -1 --out " + (tmp / "s").string()) ==
        kExitValidation);
  CHECK(run_cli("build-samples " + fixture("tiny.json").string() + " --window 3 --out " + (tmp / "s").string()) ==
        kExitOk);
  CHECK(fs::exists(tmp / "s" / "samples.jsonl"));
}
