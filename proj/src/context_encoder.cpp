#include "grec/context_encoder.hpp"

#include "grec/dialogue.hpp"
#include "grec/error.hpp"

namespace grec::model {

void add_embedding_params(ParameterStore& store, const ModelConfig& config, std::uint64_t seed,
                          const Matrix* pretrained_word) {
  using nn::InitScheme;
  if (pretrained_word) {
    if (pretrained_word->rows() != config.vocab_size || pretrained_word->cols() != config.d_model)
      throw Error("pretrained word matrix must be vocab_size x d_model");
    store.add_pretrained("emb.word", *pretrained_word);
  } else {
    store.add("emb.word", config.vocab_size, config.d_model, InitScheme::UniformScaled, seed);
  }
  store.add("emb.cas", config.num_buckets, config.d_model, InitScheme::UniformScaled, seed, false);
  store.add("emb.state", data::kNumDialogueStates, config.d_model, InitScheme::UniformScaled, seed);
}

void add_context_encoder_params(ParameterStore& store, const ModelConfig& config, std::uint64_t seed) {
  for (std::size_t l = 0; l < config.encoder_layers; ++l) {
    const std::string p = "enc." + std::to_string(l);
    add_layer_norm_params(store, p + ".ln1", config.d_model);
    add_attention_params(store, p + ".attn", config.d_model, config.heads, config.head_dim, seed);
    add_layer_norm_params(store, p + ".ln2", config.d_model);
    add_conv_ffn_params(store, p + ".ffn", config.d_model, config.filters, seed);
  }
  add_layer_norm_params(store, "enc.ln", config.d_model);
  store.add("emotion.w", config.d_model, config.num_emotions, nn::InitScheme::UniformScaled, seed);
}

EncodedContext encode_context(Tape& tape, ParameterStore& store, const ModelConfig& config,
                              const ContextInput& input) {
  const std::size_t n = input.tokens.size();
  if (n == 0) throw Error("encoder input must contain at least CLS");
  if (input.buckets.size() != n || input.states.size() != n ||
      (!input.mask.empty() && input.mask.size() != n))
    throw Error("token, bucket, state and mask sequences differ in length");

  Var x = nn::add(nn::add(nn::gather_rows(tape.param(store, "emb.word"), input.tokens),
                          nn::gather_rows(tape.param(store, "emb.cas"), input.buckets)),
                  nn::gather_rows(tape.param(store, "emb.state"), input.states));
  x = nn::add(x, tape.constant(sinusoidal_positions(n, config.d_model)));

  EncodedContext out;
  out.mask = input.mask.empty() ? std::vector<std::uint8_t>(n, 1) : input.mask;
  Matrix key_mask = key_padding_mask(n, out.mask);
  Matrix rows(n, 1);
  for (std::size_t i = 0; i < n; ++i) rows(i, 0) = out.mask[i] ? 1.0 : 0.0;
  Var row_mask = tape.constant(std::move(rows));

  for (std::size_t l = 0; l < config.encoder_layers; ++l) {
    const std::string p = "enc." + std::to_string(l);
    Var h = layer_norm(tape, store, p + ".ln1", x);
    x = nn::add(x, multi_head_attention(tape, store, p + ".attn", h, h, config.heads,
                                        config.head_dim, &key_mask));
    h = layer_norm(tape, store, p + ".ln2", x);
    x = nn::add(x, conv_ffn(tape, store, p + ".ffn", h, false, &row_mask));
  }
  out.states = layer_norm(tape, store, "enc.ln", x);
  out.cls = nn::slice_rows(out.states, 0, 1);
  return out;
}

Var emotion_logits(Tape& tape, ParameterStore& store, const EncodedContext& encoded) {
  return nn::matmul(encoded.cls, tape.param(store, "emotion.w"));
}

Var predict_emotion(Tape& tape, ParameterStore& store, const EncodedContext& encoded) {
  return nn::softmax_rows(emotion_logits(tape, store, encoded));
}

}  // namespace grec::model
