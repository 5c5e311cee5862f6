#include "grec/gcn.hpp"

#include <algorithm>

#include "grec/error.hpp"

namespace grec::model {

GraphTensors prepare_graph(const graph::CausalityGraph& graph, const kg::EmbeddingTable& table,
                           const std::vector<std::string>& relations) {
  GraphTensors out;
  out.graph = graph;
  out.node_vectors = Matrix(graph.nodes.size(), table.dimension());
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    const auto& tok = graph.nodes[i].token;
    if (!table.contains(tok)) throw Error("graph node without a word vector: " + tok);
    auto v = table.vector(tok);
    std::copy(v.begin(), v.end(), out.node_vectors.row_span(i).begin());
  }
  for (const auto& e : graph.edges) {
    auto it = std::find(relations.begin(), relations.end(), e.relation);
    if (it == relations.end()) throw Error("unknown relation in graph: " + e.relation);
    out.relation_ids.push_back(static_cast<int>(it - relations.begin()));
  }
  return out;
}

void add_gcn_params(ParameterStore& store, const ModelConfig& config, std::uint64_t seed) {
  using nn::InitScheme;
  store.add("gcn.in", config.word_dim, config.d_graph, InitScheme::UniformScaled, seed);
  store.add("gcn.rel", config.num_relations, config.d_graph, InitScheme::UniformScaled, seed);
  for (std::size_t l = 0; l < config.gcn_layers; ++l) {
    const std::string p = "gcn." + std::to_string(l);
    store.add(p + ".ws", config.d_graph, config.d_graph, InitScheme::UniformScaled, seed);
    store.add(p + ".wn", config.d_graph, config.d_graph, InitScheme::UniformScaled, seed);
    store.add(p + ".wr", config.d_graph, config.d_graph, InitScheme::UniformScaled, seed);
  }
}

Var gcn_layer(Tape& tape, const graph::CausalityGraph& graph, Var nodes, Var relations,
              Var w_self, Var w_neighbor) {
  const std::size_t n = graph.nodes.size();
  Var self = nn::matmul(nodes, w_self);
  if (graph.edges.empty()) return nn::relu(self);

  const std::size_t m = graph.edges.size();
  std::vector<double> degree(n, 0.0);
  for (const auto& e : graph.edges) {
    degree[static_cast<std::size_t>(e.src)] += 1.0;
    degree[static_cast<std::size_t>(e.dst)] += 1.0;
  }
  Matrix node_mix(n, n), rel_mix(n, m);
  for (std::size_t k = 0; k < m; ++k) {
    const auto s = static_cast<std::size_t>(graph.edges[k].src);
    const auto d = static_cast<std::size_t>(graph.edges[k].dst);
    node_mix(s, d) += 1.0 / degree[s];
    node_mix(d, s) += 1.0 / degree[d];
    rel_mix(s, k) += 1.0 / degree[s];
    rel_mix(d, k) += 1.0 / degree[d];
  }
  Var messages = nn::sub(nn::matmul(tape.constant(std::move(node_mix)), nodes),
                         nn::matmul(tape.constant(std::move(rel_mix)), relations));
  return nn::relu(nn::add(self, nn::matmul(messages, w_neighbor)));
}

Var relation_update(Var relations, Var w_relation) { return nn::matmul(relations, w_relation); }

EncodedGraph encode_graph(Tape& tape, ParameterStore& store, const GraphTensors& g,
                          std::size_t layers) {
  if (g.graph.nodes.empty()) throw Error("cannot encode a graph without nodes");
  EncodedGraph out;
  out.node_states = nn::matmul(tape.constant(g.node_vectors), tape.param(store, "gcn.in"));
  const bool has_edges = !g.graph.edges.empty();
  if (has_edges) out.relation_states = nn::gather_rows(tape.param(store, "gcn.rel"), g.relation_ids);
  for (std::size_t l = 0; l < layers; ++l) {
    const std::string p = "gcn." + std::to_string(l);
    out.node_states = gcn_layer(tape, g.graph, out.node_states, out.relation_states,
                                tape.param(store, p + ".ws"), tape.param(store, p + ".wn"));
    if (has_edges) out.relation_states = relation_update(out.relation_states, tape.param(store, p + ".wr"));
  }
  const std::size_t dg = out.node_states.cols();
  if (has_edges) {
    std::vector<int> src, dst;
    for (const auto& e : g.graph.edges) {
      src.push_back(e.src);
      dst.push_back(e.dst);
    }
    out.triples = nn::concat_cols({nn::gather_rows(out.node_states, src), out.relation_states,
                                   nn::gather_rows(out.node_states, dst)});
    out.pooled = nn::mean_rows(out.triples);
  } else {
    out.pooled = tape.constant(Matrix(1, 3 * dg));
  }
  return out;
}

Var pool_graph(const EncodedGraph& encoded) { return encoded.pooled; }

}  // namespace grec::model
