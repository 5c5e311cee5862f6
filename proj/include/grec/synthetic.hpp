#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace grec::synth {

/// Template dialogues with planted causes: the situation and the first
/// clause of the speaker turn state an event, the second clause names the
/// emotion, and the listener answers. Every dialogue is a single exchange.
struct SyntheticOptions {
  std::size_t train = 20;
  std::size_t valid = 0;
  std::size_t test = 0;
  /// Word-vector width.
  std::size_t dim = 16;
  std::uint64_t seed = 1;
  /// Listener replies repeat the cause noun and event ("sorry your dog
  /// died . ..."); otherwise they only name a reaction and a closing.
  bool echo_causes = false;
};

/// File contents in the formats the loaders read.
struct SyntheticCorpus {
  std::string dataset_csv;
  std::string assertions_tsv;
  std::string embeddings_txt;
  std::string annotations_tsv;
};

SyntheticCorpus make_corpus(const SyntheticOptions& options);

/// Writes dataset.csv, assertions.tsv, embeddings.txt and annotations.tsv.
void write_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir);

}  // namespace grec::synth
