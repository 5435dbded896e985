#include "mdvg/commands.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "mdvg/constraint.hpp"
#include "mdvg/corpus.hpp"
#include "mdvg/digest.hpp"
#include "mdvg/error.hpp"
#include "mdvg/mask_service.hpp"
#include "mdvg/metrics.hpp"
#include "mdvg/np_baseline.hpp"
#include "mdvg/samples.hpp"
#include "mdvg/splits.hpp"

#ifndef MDVG_VERSION
#define MDVG_VERSION "0.0.0"
#endif

namespace mdvg::cli {

using nlohmann::ordered_json;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << data;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Runs a command body and maps failures onto exit codes.
template <typename Body>
int guarded(Streams io, Body&& body) {
  try {
    return body();
  } catch (const Error& e) {
    io.err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    io.err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

std::string marker_config_string(const MarkerConfig& cfg) {
  return cfg.start_marker + " " + cfg.end_marker + (cfg.pad_with_space ? " pad" : " nopad");
}

}  // namespace

std::string RunManifest::config_digest() const {
  std::uint64_t h = fnv1a64(command);
  for (const auto& [k, v] : config) h = fnv1a64(k + "=" + v + "\n", h);
  for (auto s : seeds) h = fnv1a64("seed=" + std::to_string(s) + "\n", h);
  return hex64(h);
}

std::string RunManifest::to_json(const std::string& timestamp) const {
  ordered_json j;
  j["command"] = command;
  j["config_digest"] = config_digest();
  ordered_json cfg = ordered_json::object();
  for (const auto& [k, v] : config) cfg[k] = v;
  j["config"] = cfg;
  j["inputs"] = ordered_json::array();
  for (const auto& p : inputs) {
    std::string digest;
    try {
      digest = hex64(fnv1a64(read_file(p)));
    } catch (const Error&) {
      digest = "unreadable";
    }
    j["inputs"].push_back({{"path", p.string()}, {"digest", digest}});
  }
  j["seeds"] = seeds;
  j["outputs"] = outputs;
  j["tool_version"] = MDVG_VERSION;
  j["timestamp"] = timestamp;
  return j.dump(2) + "\n";
}

void write_manifest(const fs::path& dir, const RunManifest& manifest) {
  write_file(dir / "manifest.json", manifest.to_json(utc_timestamp()));
}

int cmd_stats(const fs::path& corpus_path, const std::optional<fs::path>& out_dir, Streams io) {
  return guarded(io, [&] {
    const Corpus corpus = load_corpus(corpus_path);
    const StatsReport stats = compute_stats(corpus);
    const std::string table = format_stats_table(stats, corpus.dataset_id);
    io.out << table;
    if (out_dir) {
      prepare_dir(*out_dir);
      write_file(*out_dir / "stats.txt", table);
      write_file(*out_dir / "stats.json", stats_to_json(stats, corpus.dataset_id));
      write_manifest(*out_dir, {"stats", {}, {corpus_path}, {}, {"stats.txt", "stats.json"}});
    }
    return kExitOk;
  });
}

int cmd_build_samples(const fs::path& corpus_path, int window, const fs::path& out_dir, const MarkerConfig& cfg,
                      Streams io) {
  return guarded(io, [&] {
    if (window < 0) throw Error(ErrorCode::IndexOutOfRange, "--window must be non-negative");
    const Corpus corpus = load_corpus(corpus_path);
    const auto samples = build_samples(corpus, WindowSpec{window}, cfg);
    prepare_dir(out_dir);
    const std::size_t n = export_jsonl(samples, out_dir / "samples.jsonl");
    write_manifest(out_dir, {"build-samples",
                             {{"window", std::to_string(window)}, {"markers", marker_config_string(cfg)}},
                             {corpus_path},
                             {},
                             {"samples.jsonl"}});
    io.out << "wrote " << n << " samples (" << corpus.utterance_count() << " utterances)\n";
    return kExitOk;
  });
}

int cmd_evaluate(const fs::path& corpus_path, const fs::path& predictions_path, const fs::path& report_dir,
                 Streams io) {
  return guarded(io, [&] {
    const Corpus corpus = load_corpus(corpus_path);
    const PredictionSet pred = load_predictions(predictions_path, corpus);
    const PredictionSet gold = gold_for_keys(corpus, pred);
    const EvalReport report = evaluate(gold, pred);
    const std::string table = format_report_table(report);
    prepare_dir(report_dir);
    write_file(report_dir / "report.json", report_to_json(report));
    write_file(report_dir / "report.txt", table);
    write_manifest(report_dir, {"evaluate", {}, {corpus_path, predictions_path}, {}, {"report.json", "report.txt"}});
    io.out << table;
    return kExitOk;
  });
}

int cmd_split(const fs::path& corpus_path, SplitMode mode, int k, std::optional<std::uint64_t> seed,
              const std::optional<fs::path>& test_corpus, const fs::path& out_dir, Streams io) {
  return guarded(io, [&] {
    const Corpus corpus = load_corpus(corpus_path);
    FoldManifest folds;
    RunManifest manifest{"split", {}, {corpus_path}, {}, {"folds.json"}};
    switch (mode) {
      case SplitMode::Agos:
        folds.folds = agos_folds(corpus);
        manifest.config.emplace_back("mode", "agos");
        break;
      case SplitMode::Random:
        if (!seed) throw Error(ErrorCode::BadK, "--seed is required for random folds");
        folds.folds = random_folds(corpus, k, *seed);
        folds.seed = seed;
        manifest.config.emplace_back("mode", "random");
        manifest.config.emplace_back("k", std::to_string(k));
        manifest.seeds.push_back(*seed);
        break;
      case SplitMode::Transfer: {
        if (!test_corpus) throw Error(ErrorCode::SameDataset, "--test-corpus is required for transfer");
        const Corpus other = load_corpus(*test_corpus);
        folds.folds.push_back(transfer_config(corpus, other));
        manifest.config.emplace_back("mode", "transfer");
        manifest.inputs.push_back(*test_corpus);
        break;
      }
    }
    prepare_dir(out_dir);
    write_file(out_dir / "folds.json", manifest_to_json(folds));
    write_manifest(out_dir, manifest);
    for (const auto& f : folds.folds)
      io.out << f.fold_id << ": " << f.train.size() << " train, " << f.test.size() << " test\n";
    return kExitOk;
  });
}

int cmd_export_iob(const fs::path& corpus_path, int window, const std::optional<fs::path>& views_file,
                   OverlapPolicy policy, const fs::path& out_dir, Streams io) {
  return guarded(io, [&] {
    if (window < 0) throw Error(ErrorCode::IndexOutOfRange, "--window must be non-negative");
    const Corpus corpus = load_corpus(corpus_path);
    std::map<UtteranceKey, TokenizationView> external;
    if (views_file) external = load_views(*views_file, corpus);
    std::string out;
    std::size_t blocks = 0;
    for (const auto& d : corpus.dialogues) {
      std::vector<TokenizationView> views;
      for (const auto& u : d.utterances) {
        if (!views_file) {
          views.push_back(whitespace_view(u.text));
          continue;
        }
        auto it = external.find({d.dialogue_id, u.index});
        if (it == external.end())
          throw Error(ErrorCode::ViewMismatch,
                      "no view for (" + d.dialogue_id + ", " + std::to_string(u.index) + ")");
        views.push_back(it->second);
      }
      for (const auto& u : d.utterances) {
        out += format_conll_block(d.dialogue_id, u.index, build_labeled_window(d, u.index, WindowSpec{window}, views, policy));
        ++blocks;
      }
    }
    prepare_dir(out_dir);
    write_file(out_dir / "iob.conll", out);
    RunManifest manifest{"export-iob",
                         {{"window", std::to_string(window)},
                          {"view", views_file ? "file" : "whitespace"},
                          {"policy", policy == OverlapPolicy::AnyOverlap ? "any" : "full"}},
                         {corpus_path},
                         {},
                         {"iob.conll"}};
    if (views_file) manifest.inputs.push_back(*views_file);
    write_manifest(out_dir, manifest);
    io.out << "wrote " << blocks << " blocks\n";
    return kExitOk;
  });
}

int cmd_import_iob(const fs::path& corpus_path, const fs::path& conll, const fs::path& out_dir, Streams io) {
  return guarded(io, [&] {
    const Corpus corpus = load_corpus(corpus_path);
    const IobImport imported = import_conll(read_file(conll), corpus);
    prepare_dir(out_dir);
    save_predictions(imported.predictions, out_dir / "predictions.jsonl");
    write_manifest(out_dir, {"import-iob", {}, {corpus_path, conll}, {}, {"predictions.jsonl"}});
    io.out << "decoded " << imported.predictions.size() << " utterances, " << imported.repairs
           << " I-without-B repairs\n";
    return kExitOk;
  });
}

int cmd_np_baseline(const fs::path& corpus_path, const fs::path& trees, const fs::path& out_dir, Streams io) {
  return guarded(io, [&] {
    const Corpus corpus = load_corpus(corpus_path);
    const NpBaselineResult result = run_np_baseline(read_file(trees), corpus);
    prepare_dir(out_dir);
    save_predictions(result.predictions, out_dir / "predictions.jsonl");
    write_manifest(out_dir, {"np-baseline", {}, {corpus_path, trees}, {}, {"predictions.jsonl"}});
    io.out << "predicted " << result.predictions.size() << " utterances, " << result.failed_trees
           << " trees failed\n";
    return kExitOk;
  });
}

int cmd_parse_output(const fs::path& corpus_path, const fs::path& generations, const fs::path& out_dir,
                     const MarkerConfig& cfg, Streams io) {
  return guarded(io, [&] {
    const Corpus corpus = load_corpus(corpus_path);
    std::istringstream in(read_file(generations));
    PredictionSet preds;
    std::string line;
    std::size_t line_no = 0, failures = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const std::string where = "generations line " + std::to_string(line_no);
      UtteranceKey key;
      std::string completion;
      try {
        const auto j = nlohmann::json::parse(line);
        key.dialogue_id = j.at("dialogue_id").get<std::string>();
        key.index = j.contains("index") ? j.at("index").get<int>() : j.at("utterance_index").get<int>();
        completion = j.at("completion").get<std::string>();
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedFile, where + ": " + e.what());
      }
      const Dialogue* d = corpus.find(key.dialogue_id);
      if (d == nullptr || key.index < 1 || static_cast<std::size_t>(key.index) > d->utterances.size())
        throw Error(ErrorCode::KeyMismatch, where + ": unknown utterance");
      const Utterance& u = d->utterances[key.index - 1];
      const std::string prefix = speaker_prefix(u.speaker);
      if (completion.rfind(prefix, 0) == 0) completion.erase(0, prefix.size());
      UtterancePrediction pred;
      try {
        pred.spans = parse(completion, u.text, cfg);
      } catch (const Error& e) {
        pred.parse_error = std::string(to_string(e.code()));
        ++failures;
      }
      if (!preds.emplace(key, std::move(pred)).second)
        throw Error(ErrorCode::KeyMismatch, where + ": duplicate utterance");
    }
    prepare_dir(out_dir);
    save_predictions(preds, out_dir / "predictions.jsonl");
    write_manifest(out_dir, {"parse-output", {{"markers", marker_config_string(cfg)}}, {corpus_path, generations}, {},
                             {"predictions.jsonl"}});
    io.out << "parsed " << preds.size() << " generations, " << failures << " unparseable\n";
    return kExitOk;
  });
}

int cmd_mask_serve(const fs::path& vocab_path, const std::string& listen, const MarkerConfig& cfg, std::istream& in,
                   Streams io) {
  return guarded(io, [&] {
    auto vocab = std::make_shared<const Vocab>(Vocab::load(vocab_path, cfg));
    SessionService service(vocab, cfg);
    if (listen == "stdio") {
      service.serve(in, io.out);
      return kExitOk;
    }
    if (listen.rfind("tcp:", 0) != 0) throw Error(ErrorCode::BadRequest, "--listen must be stdio or tcp:<port>");
    int port = 0;
    try {
      port = std::stoi(listen.substr(4));
    } catch (const std::exception&) {
      port = -1;
    }
    if (port < 0 || port > 65535) throw Error(ErrorCode::BadRequest, "bad port in --listen " + listen);
    TcpSessionServer server(service, static_cast<std::uint16_t>(port));
    io.err << "listening on 127.0.0.1:" << server.port() << "\n";
    server.run();
    return kExitOk;
  });
}

}  // namespace mdvg::cli
