#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mdvg/commands.hpp"

namespace cli = mdvg::cli;

int main(int argc, char** argv) {
  CLI::App app{"mdvg: mention annotation toolkit for visually grounded dialogue"};
  app.require_subcommand(1);
  app.set_version_flag("--version", MDVG_VERSION);

  mdvg::MarkerConfig markers;
  bool no_pad = false;
  auto add_marker_opts = [&](CLI::App* sub) {
    sub->add_option("--start-marker", markers.start_marker, "span start marker")->capture_default_str();
    sub->add_option("--end-marker", markers.end_marker, "span end marker")->capture_default_str();
    sub->add_flag("--no-pad", no_pad, "do not pad markers with spaces");
  };

  std::string corpus, out, input, listen = "stdio", mode, policy = "any";
  std::optional<std::string> views, test_corpus, out_opt;
  std::optional<std::uint64_t> seed;
  int window = 0, k = 5;
  cli::Streams io{std::cout, std::cerr};
  int rc = cli::kExitOk;

  auto* stats = app.add_subcommand("stats", "corpus statistics");
  stats->add_option("corpus", corpus)->required();
  stats->add_option("--out", out_opt, "also write stats.txt/stats.json here");
  stats->callback([&] { rc = cli::cmd_stats(corpus, out_opt ? std::optional<cli::fs::path>(*out_opt) : std::nullopt, io); });

  auto* build = app.add_subcommand("build-samples", "render training samples");
  build->add_option("corpus", corpus)->required();
  build->add_option("--window", window, "history window w")->required();
  build->add_option("--out", out)->required();
  add_marker_opts(build);
  build->callback([&] {
    markers.pad_with_space = !no_pad;
    rc = cli::cmd_build_samples(corpus, window, out, markers, io);
  });

  auto* eval = app.add_subcommand("evaluate", "score predictions against gold");
  eval->add_option("corpus", corpus)->required();
  eval->add_option("predictions", input)->required();
  eval->add_option("--report", out)->required();
  eval->callback([&] { rc = cli::cmd_evaluate(corpus, input, out, io); });

  auto* serve = app.add_subcommand("mask-serve", "constrained decoding session service");
  serve->add_option("vocab", input)->required();
  serve->add_option("--listen", listen, "stdio or tcp:PORT")->capture_default_str();
  add_marker_opts(serve);
  serve->callback([&] {
    markers.pad_with_space = !no_pad;
    rc = cli::cmd_mask_serve(input, listen, markers, std::cin, io);
  });

  auto* split = app.add_subcommand("split", "fold manifests");
  split->add_option("corpus", corpus)->required();
  split->add_option("--mode", mode)->required()->check(CLI::IsMember({"agos", "random", "transfer"}));
  split->add_option("--k", k)->capture_default_str();
  split->add_option("--seed", seed);
  split->add_option("--test-corpus", test_corpus, "target corpus for transfer");
  split->add_option("--out", out)->required();
  split->callback([&] {
    const auto m = mode == "agos" ? cli::SplitMode::Agos : mode == "random" ? cli::SplitMode::Random : cli::SplitMode::Transfer;
    rc = cli::cmd_split(corpus, m, k, seed, test_corpus ? std::optional<cli::fs::path>(*test_corpus) : std::nullopt, out, io);
  });

  auto* exp = app.add_subcommand("export-iob", "CoNLL export");
  exp->add_option("corpus", corpus)->required();
  exp->add_option("--window", window)->required();
  exp->add_option("--view", mode, "whitespace or file")->check(CLI::IsMember({"whitespace", "file"}));
  exp->add_option("--views", views, "token offsets JSONL for --view file");
  exp->add_option("--policy", policy, "any or full")->check(CLI::IsMember({"any", "full"}))->capture_default_str();
  exp->add_option("--out", out)->required();
  exp->callback([&] {
    if (mode == "file" && !views) {
      io.err << "error: --view file needs --views\n";
      rc = cli::kExitValidation;
      return;
    }
    const auto p = policy == "any" ? mdvg::OverlapPolicy::AnyOverlap : mdvg::OverlapPolicy::FullContainment;
    const bool use_file = mode == "file" || (mode.empty() && views);
    rc = cli::cmd_export_iob(corpus, window, use_file ? std::optional<cli::fs::path>(*views) : std::nullopt, p, out, io);
  });

  auto* imp = app.add_subcommand("iob-import", "decode CoNLL labels into predictions");
  imp->add_option("corpus", corpus)->required();
  imp->add_option("conll", input)->required();
  imp->add_option("--out", out)->required();
  imp->callback([&] { rc = cli::cmd_import_iob(corpus, input, out, io); });

  auto* np = app.add_subcommand("np-baseline", "maximal noun phrase baseline");
  np->add_option("corpus", corpus)->required();
  np->add_option("trees", input, "JSONL of bracketed parses")->required();
  np->add_option("--out", out)->required();
  np->callback([&] { rc = cli::cmd_np_baseline(corpus, input, out, io); });

  auto* po = app.add_subcommand("parse-output", "parse raw generations into predictions");
  po->add_option("corpus", corpus)->required();
  po->add_option("generations", input)->required();
  po->add_option("--out", out)->required();
  add_marker_opts(po);
  po->callback([&] {
    markers.pad_with_space = !no_pad;
    rc = cli::cmd_parse_output(corpus, input, out, markers, io);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitValidation;
  }
  return rc;
}
