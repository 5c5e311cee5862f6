#include "grec/transformer.hpp"

#include <cmath>

#include "grec/error.hpp"

namespace grec::model {

namespace {
constexpr double kMasked = -1e30;
}

Matrix sinusoidal_positions(std::size_t length, std::size_t d_model) {
  Matrix pe(length, d_model);
  for (std::size_t p = 0; p < length; ++p) {
    for (std::size_t i = 0; i < d_model; ++i) {
      const double freq = std::pow(10000.0, -static_cast<double>(i - i % 2) / static_cast<double>(d_model));
      pe(p, i) = i % 2 == 0 ? std::sin(static_cast<double>(p) * freq) : std::cos(static_cast<double>(p) * freq);
    }
  }
  return pe;
}

Matrix causal_mask(std::size_t length) {
  Matrix m(length, length);
  for (std::size_t i = 0; i < length; ++i)
    for (std::size_t j = i + 1; j < length; ++j) m(i, j) = kMasked;
  return m;
}

Matrix key_padding_mask(std::size_t queries, const std::vector<std::uint8_t>& key_mask) {
  Matrix m(queries, key_mask.size());
  for (std::size_t i = 0; i < queries; ++i)
    for (std::size_t j = 0; j < key_mask.size(); ++j)
      if (!key_mask[j]) m(i, j) = kMasked;
  return m;
}

void add_attention_params(ParameterStore& store, const std::string& prefix, std::size_t d_model,
                          std::size_t heads, std::size_t head_dim, std::uint64_t seed) {
  using nn::InitScheme;
  const std::size_t inner = heads * head_dim;
  store.add(prefix + ".q", d_model, inner, InitScheme::UniformScaled, seed);
  store.add(prefix + ".k", d_model, inner, InitScheme::UniformScaled, seed);
  store.add(prefix + ".v", d_model, inner, InitScheme::UniformScaled, seed);
  store.add(prefix + ".o", inner, d_model, InitScheme::UniformScaled, seed);
}

void add_layer_norm_params(ParameterStore& store, const std::string& prefix, std::size_t d_model) {
  store.add(prefix + ".g", 1, d_model, nn::InitScheme::Constant, 0, true, 1.0);
  store.add(prefix + ".b", 1, d_model, nn::InitScheme::Zeros, 0);
}

void add_conv_ffn_params(ParameterStore& store, const std::string& prefix, std::size_t d_model,
                         std::size_t filters, std::uint64_t seed) {
  using nn::InitScheme;
  store.add(prefix + ".conv1.w", 3 * d_model, filters, InitScheme::UniformScaled, seed);
  store.add(prefix + ".conv1.b", 1, filters, InitScheme::Zeros, seed);
  store.add(prefix + ".conv2.w", 3 * filters, d_model, InitScheme::UniformScaled, seed);
  store.add(prefix + ".conv2.b", 1, d_model, InitScheme::Zeros, seed);
}

Var multi_head_attention(Tape& tape, ParameterStore& store, const std::string& prefix, Var query,
                         Var memory, std::size_t heads, std::size_t head_dim, const Matrix* mask) {
  if (mask && (mask->rows() != query.rows() || mask->cols() != memory.rows()))
    throw Error("attention mask shape does not match queries x keys");
  Var q = nn::matmul(query, tape.param(store, prefix + ".q"));
  Var k = nn::matmul(memory, tape.param(store, prefix + ".k"));
  Var v = nn::matmul(memory, tape.param(store, prefix + ".v"));
  const double inv = 1.0 / std::sqrt(static_cast<double>(head_dim));
  Var m;
  if (mask) m = tape.constant(*mask);

  std::vector<Var> outs;
  outs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    Var qh = nn::slice_cols(q, h * head_dim, head_dim);
    Var kh = nn::slice_cols(k, h * head_dim, head_dim);
    Var vh = nn::slice_cols(v, h * head_dim, head_dim);
    Var logits = nn::scale(nn::matmul_nt(qh, kh), inv);
    if (mask) logits = nn::add(logits, m);
    outs.push_back(nn::matmul(nn::softmax_rows(logits), vh));
  }
  Var joined = heads == 1 ? outs[0] : nn::concat_cols(outs);
  return nn::matmul(joined, tape.param(store, prefix + ".o"));
}

Var layer_norm(Tape& tape, ParameterStore& store, const std::string& prefix, Var x) {
  return nn::layer_norm(x, tape.param(store, prefix + ".g"), tape.param(store, prefix + ".b"));
}

namespace {

Var conv3(Tape& tape, ParameterStore& store, const std::string& name, Var x, bool causal) {
  // causal: [x(t-2), x(t-1), x(t)]; centered: [x(t-1), x(t), x(t+1)]
  Var window = causal ? nn::concat_cols({nn::shift_rows(x, -2), nn::shift_rows(x, -1), x})
                      : nn::concat_cols({nn::shift_rows(x, -1), x, nn::shift_rows(x, 1)});
  return nn::add_row(nn::matmul(window, tape.param(store, name + ".w")),
                     tape.param(store, name + ".b"));
}

}  // namespace

Var conv_ffn(Tape& tape, ParameterStore& store, const std::string& prefix, Var x, bool causal,
             const Var* row_mask) {
  if (row_mask) x = nn::mul_col(x, *row_mask);
  Var h = nn::relu(conv3(tape, store, prefix + ".conv1", x, causal));
  if (row_mask) h = nn::mul_col(h, *row_mask);
  return conv3(tape, store, prefix + ".conv2", h, causal);
}

}  // namespace grec::model
