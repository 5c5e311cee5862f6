#include "grec/model.hpp"

#include "grec/dialogue.hpp"
#include "grec/error.hpp"

namespace grec::model {

Ablation parse_ablation(std::string_view name) {
  if (name == "full") return Ablation::Full;
  if (name == "no_graph") return Ablation::NoGraph;
  if (name == "no_implicit") return Ablation::NoImplicit;
  if (name == "no_explicit") return Ablation::NoExplicit;
  throw Error("unknown ablation '" + std::string(name) +
              "' (expected full, no_graph, no_implicit or no_explicit)");
}

std::string_view ablation_name(Ablation a) {
  switch (a) {
    case Ablation::Full: return "full";
    case Ablation::NoGraph: return "no_graph";
    case Ablation::NoImplicit: return "no_implicit";
    case Ablation::NoExplicit: return "no_explicit";
  }
  return "full";
}

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw Error(std::string(name) + " must be positive");
  };
  positive(vocab_size, "vocab_size");
  positive(d_model, "d_model");
  positive(heads, "heads");
  positive(head_dim, "head_dim");
  positive(filters, "filters");
  positive(d_graph, "d_graph");
  positive(word_dim, "word_dim");
  positive(num_relations, "num_relations");
  positive(num_emotions, "num_emotions");
  positive(max_decode_len, "max_decode_len");
  if (num_buckets < 2) throw Error("num_buckets must be at least 2");
  if (vocab_size <= data::Vocabulary::kNumSpecials) throw Error("vocab_size must exceed the special tokens");
  if (gamma < 0.0 || gamma > 1.0) throw Error("gamma must lie in [0, 1]");
}

Model::Model(ModelConfig config, std::uint64_t seed, const Matrix* pretrained_word)
    : config_(config) {
  config_.validate();
  add_embedding_params(params_, config_, seed, pretrained_word);
  add_context_encoder_params(params_, config_, seed);
  add_gcn_params(params_, config_, seed);
  add_fusion_params(params_, config_, seed);
  add_decoder_params(params_, config_, seed);
  add_output_params(params_, config_, seed);
}

std::vector<int> Model::teacher_inputs(const std::vector<int>& target) {
  if (target.empty()) throw Error("empty target");
  std::vector<int> in{data::Vocabulary::kSos};
  in.insert(in.end(), target.begin(), target.end() - 1);
  return in;
}

Encoded Model::encode(Tape& tape, const Example& example) {
  Encoded out;
  out.context = encode_context(tape, params_, config_, example.context);
  out.emotion_logits = emotion_logits(tape, params_, out.context);
  for (const auto& g : example.graphs) out.graphs.push_back(encode_graph(tape, params_, g, config_.gcn_layers));
  if (config_.ablation != Ablation::NoImplicit) out.causality = fuse_causality(tape, params_, config_, out.graphs);
  return out;
}

Decoded Model::decode(Tape& tape, const Example& example, const Encoded& encoded,
                      const std::vector<int>& inputs) {
  Decoded out;
  out.states = decoder_states(tape, params_, config_, inputs, encoded.causality, encoded.context);
  out.generic = generic_distribution(tape, params_, out.states);
  const std::size_t steps = inputs.size();

  switch (config_.ablation) {
    case Ablation::NoExplicit:
      out.mix.mixed = out.generic;
      out.mix.gate = tape.constant(Matrix(steps, 1));
      return out;
    case Ablation::NoGraph:
      out.concepts = plain_concept_distribution(tape, params_, out.states, example.plain_concepts,
                                                example.plain_concept_ids);
      break;
    case Ablation::Full:
    case Ablation::NoImplicit: {
      std::vector<const graph::CausalityGraph*> graphs;
      for (std::size_t g = 0; g < example.graphs.size(); ++g) {
        graphs.push_back(&example.graphs[g].graph);
        Var rel = triple_relevance(tape, params_, encoded.graphs[g], out.states);
        out.node_scores.push_back(propagate_scores(tape, example.graphs[g].graph, rel, steps, config_.gamma));
      }
      out.concepts = concept_distribution(tape, graphs, out.node_scores, example.node_vocab_ids);
      break;
    }
  }
  out.mix = mix_distributions(tape, params_, out.generic, out.concepts, out.states);
  return out;
}

}  // namespace grec::model
