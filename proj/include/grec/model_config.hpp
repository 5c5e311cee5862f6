#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace grec::model {

enum class Ablation { Full, NoGraph, NoImplicit, NoExplicit };

Ablation parse_ablation(std::string_view name);
std::string_view ablation_name(Ablation a);

/// Architecture hyperparameters. Defaults follow the reference setup:
/// 6 + 6 layers, 8 heads of width 40, 50 convolution filters of width 3.
struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t d_model = 300;
  std::size_t heads = 8;
  std::size_t head_dim = 40;
  std::size_t filters = 50;
  std::size_t encoder_layers = 6;
  std::size_t decoder_layers = 6;

  /// Graph hidden size; GCN node and relation states live here.
  std::size_t d_graph = 64;
  std::size_t gcn_layers = 2;
  /// Input word-vector width for graph nodes (the embedding table's).
  std::size_t word_dim = 300;
  std::size_t num_relations = 1;

  std::size_t num_buckets = 4;
  std::size_t num_emotions = 32;

  double gamma = 0.8;
  /// Initial gate bias; sigmoid(-4.59512) = 0.01.
  double gate_bias_init = -4.59511985013459;
  std::size_t max_decode_len = 40;

  Ablation ablation = Ablation::Full;

  void validate() const;
};

}  // namespace grec::model
