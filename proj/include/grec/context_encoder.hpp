#pragma once

#include <cstdint>
#include <vector>

#include "grec/model_config.hpp"
#include "grec/transformer.hpp"

namespace grec::model {

/// Encoder input ids, CLS first. An empty mask means no padding.
struct ContextInput {
  std::vector<int> tokens;
  std::vector<int> buckets;
  std::vector<int> states;
  /// 1 for real positions, 0 for padding.
  std::vector<std::uint8_t> mask;
};

struct EncodedContext {
  /// positions x d_model
  Var states;
  /// Row 0 of states.
  Var cls;
  std::vector<std::uint8_t> mask;
};

/// emb.word (trainable), emb.cas (frozen), emb.state. Rows of
/// `pretrained_word` replace the random word initialization when given.
void add_embedding_params(ParameterStore& store, const ModelConfig& config, std::uint64_t seed,
                          const Matrix* pretrained_word = nullptr);
void add_context_encoder_params(ParameterStore& store, const ModelConfig& config, std::uint64_t seed);

/// Token + causal + dialogue-state embeddings plus positions, through
/// pre-norm transformer layers (self-attention, width-3 convolution FFN) and
/// a final layer norm.
EncodedContext encode_context(Tape& tape, ParameterStore& store, const ModelConfig& config,
                              const ContextInput& input);

/// 1 x num_emotions logits W_e q.
Var emotion_logits(Tape& tape, ParameterStore& store, const EncodedContext& encoded);
/// softmax(W_e q)
Var predict_emotion(Tape& tape, ParameterStore& store, const EncodedContext& encoded);

}  // namespace grec::model
