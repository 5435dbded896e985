#include "mdvg/samples.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"
#include "mdvg/error.hpp"
#include "mdvg/utf8.hpp"

namespace mdvg {

using nlohmann::json;
using nlohmann::ordered_json;

std::string speaker_prefix(Speaker s) { return std::string(1, speaker_char(s)) + ": "; }

std::string speaker_line(const Utterance& u) { return speaker_prefix(u.speaker) + u.text; }

namespace {

const Utterance& target_of(const Dialogue& dialogue, int index) {
  if (index < 1 || static_cast<std::size_t>(index) > dialogue.utterances.size())
    throw Error(ErrorCode::IndexOutOfRange, "utterance " + std::to_string(index) + " not in dialogue '" +
                                                dialogue.dialogue_id + "' (" +
                                                std::to_string(dialogue.utterances.size()) + " utterances)");
  return dialogue.utterances[index - 1];
}

int history_length(int index, WindowSpec spec) {
  if (spec.w < 0) throw Error(ErrorCode::IndexOutOfRange, "window must be non-negative");
  return std::min(spec.w, index - 1);
}

}  // namespace

std::string build_inference_prompt(const Dialogue& dialogue, int index, WindowSpec spec) {
  const Utterance& target = target_of(dialogue, index);
  const int h = history_length(index, spec);
  std::string prompt;
  if (h > 0) {
    for (int i = index - h; i <= index; ++i) {
      prompt += speaker_line(dialogue.utterances[i - 1]);
      prompt += i == index ? "\n\n" : "\n";
    }
  }
  prompt += speaker_line(target);
  prompt += kInferenceToken;
  return prompt;
}

Sample build_sample(const Dialogue& dialogue, int index, WindowSpec spec, const MarkerConfig& cfg) {
  const Utterance& target = target_of(dialogue, index);
  Sample s;
  s.dialogue_id = dialogue.dialogue_id;
  s.utterance_index = index;
  s.h = history_length(index, spec);
  s.prompt = build_inference_prompt(dialogue, index, spec);
  s.completion = speaker_prefix(target.speaker) + render(target.text, target.mentions, cfg);
  s.mask_boundary = utf8::length(s.prompt);
  return s;
}

std::vector<Sample> build_samples(const Corpus& corpus, WindowSpec spec, const MarkerConfig& cfg) {
  std::vector<Sample> out;
  out.reserve(corpus.utterance_count());
  for (const auto& d : corpus.dialogues)
    for (const auto& u : d.utterances) out.push_back(build_sample(d, u.index, spec, cfg));
  return out;
}

std::string sample_to_json(const Sample& s) {
  ordered_json j;
  j["dialogue_id"] = s.dialogue_id;
  j["utterance_index"] = s.utterance_index;
  j["h"] = s.h;
  j["prompt"] = s.prompt;
  j["completion"] = s.completion;
  j["mask_boundary"] = s.mask_boundary;
  return j.dump();
}

Sample sample_from_json(std::string_view line) {
  try {
    const json j = json::parse(line);
    Sample s;
    s.dialogue_id = j.at("dialogue_id").get<std::string>();
    s.utterance_index = j.at("utterance_index").get<int>();
    s.h = j.at("h").get<int>();
    s.prompt = j.at("prompt").get<std::string>();
    s.completion = j.at("completion").get<std::string>();
    s.mask_boundary = j.at("mask_boundary").get<std::size_t>();
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedFile, std::string("sample record: ") + e.what());
  }
}

std::size_t export_jsonl(const std::vector<Sample>& samples, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  for (const auto& s : samples) out << sample_to_json(s) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
  return samples.size();
}

std::vector<Sample> import_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<Sample> out;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(sample_from_json(line));
  return out;
}

}  // namespace mdvg
