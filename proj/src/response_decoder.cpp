#include "grec/response_decoder.hpp"

#include <map>

#include "grec/dialogue.hpp"
#include "grec/error.hpp"

namespace grec::model {

namespace {

void add_gru_params(ParameterStore& store, const std::string& p, std::size_t input,
                    std::size_t hidden, std::uint64_t seed) {
  using nn::InitScheme;
  for (const char* gate : {"z", "r", "n"}) {
    store.add(p + ".w" + gate, input, hidden, InitScheme::UniformScaled, seed);
    store.add(p + ".u" + gate, hidden, hidden, InitScheme::UniformScaled, seed);
    store.add(p + ".b" + gate, 1, hidden, InitScheme::Zeros, seed);
  }
}

Var ones(Tape& tape, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  m.fill(1.0);
  return tape.constant(std::move(m));
}

}  // namespace

void add_fusion_params(ParameterStore& store, const ModelConfig& config, std::uint64_t seed) {
  add_gru_params(store, "fuse.fwd", 3 * config.d_graph, config.d_graph, seed);
  add_gru_params(store, "fuse.bwd", 3 * config.d_graph, config.d_graph, seed);
  store.add("fuse.out", 2 * config.d_graph, config.d_model, nn::InitScheme::UniformScaled, seed);
}

void add_decoder_params(ParameterStore& store, const ModelConfig& config, std::uint64_t seed) {
  for (std::size_t l = 0; l < config.decoder_layers; ++l) {
    const std::string p = "dec." + std::to_string(l);
    add_layer_norm_params(store, p + ".ln1", config.d_model);
    add_attention_params(store, p + ".self", config.d_model, config.heads, config.head_dim, seed);
    add_layer_norm_params(store, p + ".ln2", config.d_model);
    add_attention_params(store, p + ".cross", config.d_model, config.heads, config.head_dim, seed);
    add_layer_norm_params(store, p + ".ln3", config.d_model);
    add_conv_ffn_params(store, p + ".ffn", config.d_model, config.filters, seed);
  }
  add_layer_norm_params(store, "dec.ln", config.d_model);
}

void add_output_params(ParameterStore& store, const ModelConfig& config, std::uint64_t seed) {
  using nn::InitScheme;
  store.add("out.voc", config.d_model, config.vocab_size, InitScheme::Zeros, seed);
  store.add("out.bias", 1, config.vocab_size, InitScheme::Zeros, seed);
  store.add("pointer.rel", 3 * config.d_graph, config.d_model, InitScheme::UniformScaled, seed);
  store.add("pointer.gate", config.d_model, 1, InitScheme::Zeros, seed);
  store.add("pointer.gate_bias", 1, 1, InitScheme::Constant, seed, true, config.gate_bias_init);
}

Var gru_cell(Tape& tape, ParameterStore& store, const std::string& p, Var h, Var x) {
  auto gate = [&](const std::string& g, Var hidden) {
    return nn::add_row(nn::add(nn::matmul(x, tape.param(store, p + ".w" + g)),
                               nn::matmul(hidden, tape.param(store, p + ".u" + g))),
                       tape.param(store, p + ".b" + g));
  };
  Var z = nn::sigmoid(gate("z", h));
  Var r = nn::sigmoid(gate("r", h));
  Var n = nn::tanh(gate("n", nn::mul(r, h)));
  // (1 - z) n + z h
  return nn::add(nn::sub(n, nn::mul(z, n)), nn::mul(z, h));
}

BiGruStates bigru(Tape& tape, ParameterStore& store, const std::string& forward_prefix,
                  const std::string& backward_prefix, const std::vector<Var>& inputs,
                  std::size_t hidden) {
  if (inputs.empty()) throw Error("bigru needs at least one input");
  BiGruStates out;
  out.forward = tape.constant(Matrix(1, hidden));
  for (const auto& x : inputs) out.forward = gru_cell(tape, store, forward_prefix, out.forward, x);
  out.backward = tape.constant(Matrix(1, hidden));
  for (auto it = inputs.rbegin(); it != inputs.rend(); ++it)
    out.backward = gru_cell(tape, store, backward_prefix, out.backward, *it);
  return out;
}

Var fuse_causality(Tape& tape, ParameterStore& store, const ModelConfig& config,
                   const std::vector<EncodedGraph>& graphs) {
  if (graphs.empty()) return tape.constant(Matrix(1, config.d_model));
  std::vector<Var> pooled;
  for (const auto& g : graphs) pooled.push_back(pool_graph(g));
  auto s = bigru(tape, store, "fuse.fwd", "fuse.bwd", pooled, config.d_graph);
  return nn::sigmoid(nn::matmul(nn::concat_cols({s.forward, s.backward}), tape.param(store, "fuse.out")));
}

Var decoder_states(Tape& tape, ParameterStore& store, const ModelConfig& config,
                   const std::vector<int>& inputs, Var causality, const EncodedContext& context) {
  const std::size_t n = inputs.size();
  if (n == 0 || inputs[0] != data::Vocabulary::kSos) throw Error("decoder input must start with SOS");
  if (n > config.max_decode_len)
    throw Error("decoder prefix of " + std::to_string(n) + " exceeds max length " +
                std::to_string(config.max_decode_len));

  Var x = nn::gather_rows(tape.param(store, "emb.word"), inputs);
  if (causality.valid()) {
    Matrix first(n, 1);
    first(0, 0) = 1.0;
    // row 0 gets H_Q, other rows nothing
    x = nn::add(x, nn::matmul(tape.constant(std::move(first)), causality));
  }
  x = nn::add(x, tape.constant(sinusoidal_positions(n, config.d_model)));

  const Matrix self_mask = causal_mask(n);
  const Matrix cross_mask = key_padding_mask(n, context.mask);
  for (std::size_t l = 0; l < config.decoder_layers; ++l) {
    const std::string p = "dec." + std::to_string(l);
    Var h = layer_norm(tape, store, p + ".ln1", x);
    x = nn::add(x, multi_head_attention(tape, store, p + ".self", h, h, config.heads,
                                        config.head_dim, &self_mask));
    h = layer_norm(tape, store, p + ".ln2", x);
    x = nn::add(x, multi_head_attention(tape, store, p + ".cross", h, context.states, config.heads,
                                        config.head_dim, &cross_mask));
    h = layer_norm(tape, store, p + ".ln3", x);
    x = nn::add(x, conv_ffn(tape, store, p + ".ffn", h, true));
  }
  return layer_norm(tape, store, "dec.ln", x);
}

Var decoder_step(Tape& tape, ParameterStore& store, const ModelConfig& config,
                 const std::vector<int>& prefix, Var causality, const EncodedContext& context) {
  Var s = decoder_states(tape, store, config, prefix, causality, context);
  return nn::slice_rows(s, s.rows() - 1, 1);
}

Var generic_distribution(Tape& tape, ParameterStore& store, Var states) {
  return nn::softmax_rows(nn::add_row(nn::matmul(states, tape.param(store, "out.voc")),
                                      tape.param(store, "out.bias")));
}

Var triple_relevance(Tape& tape, ParameterStore& store, const EncodedGraph& graph, Var states) {
  if (!graph.triples.valid()) return {};
  return nn::sigmoid(nn::matmul_nt(nn::matmul(graph.triples, tape.param(store, "pointer.rel")), states));
}

std::vector<Var> propagate_scores(Tape& tape, const graph::CausalityGraph& graph, Var relevance,
                                  std::size_t steps, double gamma) {
  if (gamma < 0.0 || gamma > 1.0) throw Error("gamma must lie in [0, 1]");
  const std::size_t n = graph.nodes.size();
  std::vector<Var> score(n);
  const int max_depth = graph.max_depth();
  for (std::size_t i = 0; i < n; ++i)
    if (graph.nodes[i].depth == 0) score[i] = ones(tape, 1, steps);

  for (int d = 1; d <= max_depth; ++d) {
    for (std::size_t i = 0; i < n; ++i) {
      if (graph.nodes[i].depth != d) continue;
      std::vector<Var> terms;
      for (std::size_t k = 0; k < graph.edges.size(); ++k) {
        const auto& e = graph.edges[k];
        int other = -1;
        if (static_cast<std::size_t>(e.dst) == i) other = e.src;
        else if (static_cast<std::size_t>(e.src) == i) other = e.dst;
        if (other < 0 || graph.nodes[static_cast<std::size_t>(other)].depth >= d) continue;
        terms.push_back(nn::add(nn::scale(score[static_cast<std::size_t>(other)], gamma),
                                nn::slice_rows(relevance, k, 1)));
      }
      if (terms.empty()) continue;
      Var sum = terms[0];
      for (std::size_t t = 1; t < terms.size(); ++t) sum = nn::add(sum, terms[t]);
      score[i] = terms.size() == 1 ? sum : nn::scale(sum, 1.0 / static_cast<double>(terms.size()));
    }
  }
  for (auto& s : score)
    if (!s.valid()) s = tape.constant(Matrix(1, steps));
  return score;
}

ConceptDistribution concept_distribution(Tape& tape,
                                         const std::vector<const graph::CausalityGraph*>& graphs,
                                         const std::vector<std::vector<Var>>& node_scores,
                                         const std::vector<std::vector<int>>& node_vocab_ids) {
  ConceptDistribution out;
  std::map<std::string, std::size_t> slot;
  std::vector<Var> sums;
  for (std::size_t g = 0; g < graphs.size(); ++g) {
    for (std::size_t i = 0; i < graphs[g]->nodes.size(); ++i) {
      const int vid = node_vocab_ids[g][i];
      if (vid < 0) continue;
      const auto& tok = graphs[g]->nodes[i].token;
      auto [it, fresh] = slot.emplace(tok, out.tokens.size());
      if (fresh) {
        out.tokens.push_back(tok);
        out.vocab_ids.push_back(vid);
        sums.push_back(node_scores[g][i]);
      } else {
        sums[it->second] = nn::add(sums[it->second], node_scores[g][i]);
      }
    }
  }
  if (out.empty()) return out;
  out.scores = nn::transpose(sums.size() == 1 ? sums[0] : nn::concat_rows(sums));
  out.probs = nn::softmax_rows(out.scores);
  (void)tape;
  return out;
}

ConceptDistribution plain_concept_distribution(Tape& tape, ParameterStore& store, Var states,
                                               const std::vector<std::string>& tokens,
                                               const std::vector<int>& vocab_ids) {
  if (tokens.size() != vocab_ids.size()) throw Error("concept token and id lists differ in length");
  ConceptDistribution out;
  out.tokens = tokens;
  out.vocab_ids = vocab_ids;
  if (out.empty()) return out;
  Var emb = nn::gather_rows(tape.param(store, "emb.word"), vocab_ids);
  Var bias = nn::transpose(nn::gather_rows(nn::transpose(tape.param(store, "out.bias")), vocab_ids));
  out.scores = nn::add_row(nn::matmul_nt(states, emb), bias);
  out.probs = nn::softmax_rows(out.scores);
  return out;
}

Mixture mix_distributions(Tape& tape, ParameterStore& store, Var generic,
                          const ConceptDistribution& concepts, Var states) {
  Mixture out;
  const std::size_t steps = generic.rows();
  const std::size_t vocab = generic.cols();
  if (concepts.empty()) {
    out.mixed = generic;
    out.gate = tape.constant(Matrix(steps, 1));
    return out;
  }
  Matrix scatter(concepts.tokens.size(), vocab);
  for (std::size_t c = 0; c < concepts.vocab_ids.size(); ++c) {
    const int v = concepts.vocab_ids[c];
    if (v < 0 || static_cast<std::size_t>(v) >= vocab) throw Error("concept id outside the vocabulary");
    scatter(c, static_cast<std::size_t>(v)) += 1.0;
  }
  Var pointer = nn::matmul(concepts.probs, tape.constant(std::move(scatter)));
  out.gate = nn::sigmoid(nn::add_row(nn::matmul(states, tape.param(store, "pointer.gate")),
                                     tape.param(store, "pointer.gate_bias")));
  Var keep = nn::add_scalar(nn::scale(out.gate, -1.0), 1.0);
  out.mixed = nn::add(nn::mul_col(pointer, out.gate), nn::mul_col(generic, keep));
  return out;
}

}  // namespace grec::model
