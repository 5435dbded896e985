#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mdvg/annotation.hpp"
#include "mdvg/iob.hpp"

namespace mdvg::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitInternal = 3;

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

// Every command that writes an output directory also writes exactly one
// manifest.json there. Inputs are recorded with a content digest.
struct RunManifest {
  std::string command;
  std::vector<std::pair<std::string, std::string>> config;  // ordered key/value pairs
  std::vector<fs::path> inputs;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> outputs;

  std::string config_digest() const;
  std::string to_json(const std::string& timestamp) const;
};

void write_manifest(const fs::path& dir, const RunManifest& manifest);

int cmd_stats(const fs::path& corpus, const std::optional<fs::path>& out_dir, Streams io);

int cmd_build_samples(const fs::path& corpus, int window, const fs::path& out_dir, const MarkerConfig& cfg, Streams io);

int cmd_evaluate(const fs::path& corpus, const fs::path& predictions, const fs::path& report_dir, Streams io);

enum class SplitMode { Agos, Random, Transfer };

int cmd_split(const fs::path& corpus, SplitMode mode, int k, std::optional<std::uint64_t> seed,
              const std::optional<fs::path>& test_corpus, const fs::path& out_dir, Streams io);

int cmd_export_iob(const fs::path& corpus, int window, const std::optional<fs::path>& views_file, OverlapPolicy policy,
                   const fs::path& out_dir, Streams io);

int cmd_import_iob(const fs::path& corpus, const fs::path& conll, const fs::path& out_dir, Streams io);

int cmd_np_baseline(const fs::path& corpus, const fs::path& trees, const fs::path& out_dir, Streams io);

int cmd_parse_output(const fs::path& corpus, const fs::path& generations, const fs::path& out_dir,
                     const MarkerConfig& cfg, Streams io);

// listen: "stdio" or "tcp:<port>". With stdio, requests come from `in`.
int cmd_mask_serve(const fs::path& vocab, const std::string& listen, const MarkerConfig& cfg, std::istream& in,
                   Streams io);

}  // namespace mdvg::cli
