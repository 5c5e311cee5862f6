#include "grec/pipeline.hpp"

#include <algorithm>
#include <set>

#include "grec/error.hpp"

namespace grec::model {

Example prepare_example(const data::Conversation& conversation,
                        const std::vector<cause::CauseAnnotation>& annotations,
                        const std::vector<graph::CausalityGraph>& graphs,
                        const std::vector<cause::ConceptSets>& concepts,
                        const data::Vocabulary& vocab, const kg::TripleStore& store,
                        const PrepareOptions& options) {
  if (options.max_decode_len < 2) throw Error("max_decode_len must be at least 2");
  Example ex;
  ex.id = conversation.id;
  ex.emotion = conversation.emotion;

  const auto flat = data::flatten_context(conversation, options.max_context);
  ex.context.tokens = vocab.encode(flat.tokens);
  ex.context.tokens[0] = data::Vocabulary::kCls;
  ex.context.states = flat.states;
  ex.context.buckets = cause::causal_buckets(flat, annotations, options.num_buckets);

  for (const auto& g : graphs) {
    if (g.nodes.empty()) continue;
    ex.graphs.push_back(prepare_graph(g, store.embeddings(), store.relations()));
    std::vector<int> ids;
    for (const auto& n : g.nodes) ids.push_back(vocab.contains(n.token) ? vocab.id(n.token) : -1);
    ex.node_vocab_ids.push_back(std::move(ids));
  }

  std::set<std::string> plain;
  for (const auto& c : concepts) {
    plain.insert(c.emotion.begin(), c.emotion.end());
    plain.insert(c.cause.begin(), c.cause.end());
  }
  for (const auto& tok : plain) {
    if (!vocab.contains(tok)) continue;
    ex.plain_concepts.push_back(tok);
    ex.plain_concept_ids.push_back(vocab.id(tok));
  }

  ex.target = vocab.encode(conversation.target);
  if (ex.target.size() > options.max_decode_len - 1) ex.target.resize(options.max_decode_len - 1);
  ex.target.push_back(data::Vocabulary::kEos);
  return ex;
}

std::vector<Example> prepare_corpus(const std::vector<data::Conversation>& conversations,
                                    const cause::CauseDetector& detector,
                                    const kg::TripleStore& store, const data::Vocabulary& vocab,
                                    const CorpusSettings& settings, graph::GraphCache* cache,
                                    const cause::PosLexicon& lexicon) {
  std::vector<Example> out;
  out.reserve(conversations.size());
  for (const auto& conv : conversations) {
    auto annotations = detector.detect(conv);
    auto graphs = graph::build_all_graphs(conv, annotations, store, settings.graphs, cache, lexicon);
    auto concepts = graph::clause_concepts(conv, annotations, store, lexicon);
    out.push_back(prepare_example(conv, annotations, graphs, concepts, vocab, store, settings.prepare));
  }
  return out;
}

void fit_config_to_data(ModelConfig& config, const data::Vocabulary& vocab,
                        const kg::TripleStore& store) {
  config.vocab_size = vocab.size();
  config.word_dim = store.embeddings().dimension();
  config.num_relations = std::max<std::size_t>(1, store.relations().size());
}

std::optional<Matrix> pretrained_word_matrix(const data::Vocabulary& vocab,
                                             const kg::EmbeddingTable& table, std::size_t d_model,
                                             std::uint64_t seed) {
  if (table.dimension() != d_model) return std::nullopt;
  Matrix m = nn::uniform_scaled(vocab.size(), d_model, seed, "emb.word");
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    const auto& tok = vocab.token(static_cast<int>(i));
    if (!table.contains(tok)) continue;
    auto v = table.vector(tok);
    std::copy(v.begin(), v.end(), m.row_span(i).begin());
  }
  return m;
}

}  // namespace grec::model
