#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "grec/context_encoder.hpp"
#include "grec/gcn.hpp"
#include "grec/model_config.hpp"
#include "grec/response_decoder.hpp"

namespace grec::model {

/// A conversation resolved to ids and tensors, ready for the model.
struct Example {
  std::string id;
  ContextInput context;
  /// Graphs with at least one node, in clause order.
  std::vector<GraphTensors> graphs;
  /// Vocabulary id per graph node, -1 when the token is not in the vocabulary.
  std::vector<std::vector<int>> node_vocab_ids;
  /// Emotion and cause concepts of every clause, in the vocabulary.
  std::vector<std::string> plain_concepts;
  std::vector<int> plain_concept_ids;
  int emotion = 0;
  /// Gold response ids ending in EOS.
  std::vector<int> target;
};

struct Encoded {
  EncodedContext context;
  Var emotion_logits;
  std::vector<EncodedGraph> graphs;
  /// H_Q as added to the first decoder input; invalid when not injected.
  Var causality;
};

struct Decoded {
  /// steps x d_model
  Var states;
  Var generic;
  /// Per graph, per node score rows (full model only).
  std::vector<std::vector<Var>> node_scores;
  ConceptDistribution concepts;
  Mixture mix;
};

class Model {
 public:
  Model(ModelConfig config, std::uint64_t seed, const Matrix* pretrained_word = nullptr);

  const ModelConfig& config() const { return config_; }
  void set_ablation(Ablation a) { config_.ablation = a; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }

  Encoded encode(Tape& tape, const Example& example);
  /// Distributions for every position of `inputs` (SOS first).
  Decoded decode(Tape& tape, const Example& example, const Encoded& encoded,
                 const std::vector<int>& inputs);

  /// SOS followed by all but the last target token.
  static std::vector<int> teacher_inputs(const std::vector<int>& target);

 private:
  ModelConfig config_;
  ParameterStore params_;
};

}  // namespace grec::model
