#pragma once

#include <string>
#include <vector>

#include "grec/context_encoder.hpp"
#include "grec/gcn.hpp"
#include "grec/model_config.hpp"

namespace grec::model {

void add_fusion_params(ParameterStore& store, const ModelConfig& config, std::uint64_t seed);
void add_decoder_params(ParameterStore& store, const ModelConfig& config, std::uint64_t seed);
void add_output_params(ParameterStore& store, const ModelConfig& config, std::uint64_t seed);

/// GRU cell with parameters `<prefix>.{wz,uz,bz,wr,ur,br,wn,un,bn}`.
Var gru_cell(Tape& tape, ParameterStore& store, const std::string& prefix, Var h, Var x);

struct BiGruStates {
  Var forward;
  Var backward;
};

/// Final forward state over `inputs` and final backward state over the
/// reversed sequence, both starting from zeros. `inputs` must be non-empty.
BiGruStates bigru(Tape& tape, ParameterStore& store, const std::string& forward_prefix,
                  const std::string& backward_prefix, const std::vector<Var>& inputs,
                  std::size_t hidden);

/// H_Q = sigmoid([s_fwd; s_bwd] W_g) over the pooled graph vectors; a zero
/// 1 x d_model vector when there are no graphs.
Var fuse_causality(Tape& tape, ParameterStore& store, const ModelConfig& config,
                   const std::vector<EncodedGraph>& graphs);

/// Decoder states for every position of `inputs` (SOS first). Position 0
/// receives emb(SOS) + causality; an invalid `causality` adds nothing.
Var decoder_states(Tape& tape, ParameterStore& store, const ModelConfig& config,
                   const std::vector<int>& inputs, Var causality, const EncodedContext& context);

/// State at the last position of the prefix.
Var decoder_step(Tape& tape, ParameterStore& store, const ModelConfig& config,
                 const std::vector<int>& prefix, Var causality, const EncodedContext& context);

/// softmax(s W_voc + b) per row.
Var generic_distribution(Tape& tape, ParameterStore& store, Var states);

/// sigmoid([h_src; h_r; h_dst] W_rel s_t) as an edges x steps matrix;
/// invalid for edgeless graphs.
Var triple_relevance(Tape& tape, ParameterStore& store, const EncodedGraph& graph, Var states);

/// Per-node 1 x steps score rows. Cause nodes score 1; a node at depth d
/// averages gamma * score(v_j) + R over adjacent edges whose other endpoint
/// is shallower; nodes without such edges score 0.
std::vector<Var> propagate_scores(Tape& tape, const graph::CausalityGraph& graph, Var relevance,
                                  std::size_t steps, double gamma);

/// Distinct in-vocabulary concept tokens with their summed scores.
struct ConceptDistribution {
  std::vector<std::string> tokens;
  std::vector<int> vocab_ids;
  /// steps x concepts, before the softmax; invalid when there are none.
  Var scores;
  /// Row-wise softmax of scores.
  Var probs;

  bool empty() const { return tokens.empty(); }
};

/// Sums node scores per token across graphs, drops nodes whose vocabulary
/// id is negative, and normalizes each step. Tokens keep first-seen order.
ConceptDistribution concept_distribution(Tape& tape,
                                         const std::vector<const graph::CausalityGraph*>& graphs,
                                         const std::vector<std::vector<Var>>& node_scores,
                                         const std::vector<std::vector<int>>& node_vocab_ids);

/// Concept weights emb(w) s_t + b_w over a fixed concept id list.
ConceptDistribution plain_concept_distribution(Tape& tape, ParameterStore& store, Var states,
                                               const std::vector<std::string>& tokens,
                                               const std::vector<int>& vocab_ids);

struct Mixture {
  /// steps x vocab
  Var mixed;
  /// steps x 1
  Var gate;
};

/// g = sigmoid(s W_gate + b_gate); mixed = g scatter(concepts) + (1 - g)
/// generic. An empty concept set forces g = 0 and returns `generic` itself.
Mixture mix_distributions(Tape& tape, ParameterStore& store, Var generic,
                          const ConceptDistribution& concepts, Var states);

}  // namespace grec::model
