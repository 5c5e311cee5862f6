#pragma once

#include <string>
#include <vector>

#include "grec/graph_builder.hpp"
#include "grec/kg_store.hpp"
#include "grec/model_config.hpp"
#include "grec/transformer.hpp"

namespace grec::model {

/// A causality graph with its node word vectors and relation ids resolved.
struct GraphTensors {
  graph::CausalityGraph graph;
  /// nodes x word_dim
  Matrix node_vectors;
  /// Relation-table row per edge.
  std::vector<int> relation_ids;
};

/// Fails when a node token has no word vector or a relation is unknown.
GraphTensors prepare_graph(const graph::CausalityGraph& graph, const kg::EmbeddingTable& table,
                           const std::vector<std::string>& relations);

struct EncodedGraph {
  /// nodes x d_g
  Var node_states;
  /// edges x d_g; invalid for edgeless graphs.
  Var relation_states;
  /// edges x 3 d_g rows [h_src; h_r; h_dst]; invalid for edgeless graphs.
  Var triples;
  /// 1 x 3 d_g
  Var pooled;
};

void add_gcn_params(ParameterStore& store, const ModelConfig& config, std::uint64_t seed);

/// h_i' = ReLU(W_s h_i + mean over adjacent edges of W_n (h_j - h_r)).
/// Isolated nodes only keep the self term.
Var gcn_layer(Tape& tape, const graph::CausalityGraph& graph, Var nodes, Var relations,
              Var w_self, Var w_neighbor);

/// h_r' = W_R h_r
Var relation_update(Var relations, Var w_relation);

/// Projects node vectors to d_g, then alternates gcn_layer and
/// relation_update `layers` times. layers = 0 returns the projection.
EncodedGraph encode_graph(Tape& tape, ParameterStore& store, const GraphTensors& graph,
                          std::size_t layers);

/// Mean of the triple rows; zeros when the graph has no edges.
Var pool_graph(const EncodedGraph& encoded);

}  // namespace grec::model
