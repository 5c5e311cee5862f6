#pragma once

#include <optional>
#include <vector>

#include "grec/causality.hpp"
#include "grec/dialogue.hpp"
#include "grec/graph_builder.hpp"
#include "grec/model.hpp"

namespace grec::model {

struct PrepareOptions {
  std::size_t max_context = 256;
  std::size_t num_buckets = 4;
  /// Target length including EOS.
  std::size_t max_decode_len = 40;
};

/// Resolves a conversation, its cause annotations, per-clause graphs and
/// concept sets into model inputs.
Example prepare_example(const data::Conversation& conversation,
                        const std::vector<cause::CauseAnnotation>& annotations,
                        const std::vector<graph::CausalityGraph>& graphs,
                        const std::vector<cause::ConceptSets>& concepts,
                        const data::Vocabulary& vocab, const kg::TripleStore& store,
                        const PrepareOptions& options);

struct CorpusSettings {
  graph::GraphSettings graphs;
  PrepareOptions prepare;
};

/// Detects causes, builds (or loads cached) graphs and prepares every
/// conversation.
std::vector<Example> prepare_corpus(const std::vector<data::Conversation>& conversations,
                                    const cause::CauseDetector& detector,
                                    const kg::TripleStore& store, const data::Vocabulary& vocab,
                                    const CorpusSettings& settings,
                                    graph::GraphCache* cache = nullptr,
                                    const cause::PosLexicon& lexicon = cause::PosLexicon::builtin());

/// Model shape settings that follow from the data: vocabulary size, word
/// vector width and relation count.
void fit_config_to_data(ModelConfig& config, const data::Vocabulary& vocab,
                        const kg::TripleStore& store);

/// Word embedding initialization: rows of tokens found in `table` are
/// copied, the rest keep the uniform draw for "emb.word". Returns nullopt
/// when the table width differs from d_model.
std::optional<Matrix> pretrained_word_matrix(const data::Vocabulary& vocab,
                                             const kg::EmbeddingTable& table, std::size_t d_model,
                                             std::uint64_t seed);

}  // namespace grec::model
