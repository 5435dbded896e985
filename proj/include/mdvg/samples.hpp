#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "mdvg/annotation.hpp"
#include "mdvg/corpus.hpp"

namespace mdvg {

// Maximum number of preceding messages given as history.
struct WindowSpec {
  int w = 0;
};

// Separator between the prompt and the annotated completion.
inline constexpr std::string_view kInferenceToken = " -> ";

struct Sample {
  std::string dialogue_id;
  int utterance_index = 0;
  int h = 0;  // history messages actually used
  std::string prompt;
  std::string completion;
  std::size_t mask_boundary = 0;  // scalar offset into prompt + completion where loss starts

  bool operator==(const Sample&) const = default;
};

// "{speaker}: {text}"
std::string speaker_line(const Utterance& u);
std::string speaker_prefix(Speaker s);

// Prompt layout: the h history messages and the target, one per line, then a
// blank line, the target again and the inference token. With h = 0 only the
// target line and the inference token remain.
std::string build_inference_prompt(const Dialogue& dialogue, int index, WindowSpec spec);

Sample build_sample(const Dialogue& dialogue, int index, WindowSpec spec, const MarkerConfig& cfg);

std::vector<Sample> build_samples(const Corpus& corpus, WindowSpec spec, const MarkerConfig& cfg);

std::string sample_to_json(const Sample& s);
Sample sample_from_json(std::string_view line);

std::size_t export_jsonl(const std::vector<Sample>& samples, const std::filesystem::path& path);
std::vector<Sample> import_jsonl(const std::filesystem::path& path);

}  // namespace mdvg
