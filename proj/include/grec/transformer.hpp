#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "grec/autodiff.hpp"
#include "grec/parameters.hpp"

namespace grec::model {

using nn::Matrix;
using nn::ParameterStore;
using nn::Tape;
using nn::Var;

/// Fixed sinusoidal position table: sin on even columns, cos on odd.
Matrix sinusoidal_positions(std::size_t length, std::size_t d_model);

/// Additive mask (0 or -1e30) with mask(i, j) < 0 where j > i.
Matrix causal_mask(std::size_t length);

/// Additive mask hiding padded keys; `key_mask[j] == 0` marks padding.
Matrix key_padding_mask(std::size_t queries, const std::vector<std::uint8_t>& key_mask);

void add_attention_params(ParameterStore& store, const std::string& prefix, std::size_t d_model,
                          std::size_t heads, std::size_t head_dim, std::uint64_t seed);
void add_layer_norm_params(ParameterStore& store, const std::string& prefix, std::size_t d_model);
void add_conv_ffn_params(ParameterStore& store, const std::string& prefix, std::size_t d_model,
                         std::size_t filters, std::uint64_t seed);

/// Scaled dot-product multi-head attention of `query` rows over `memory`
/// rows with an optional additive mask (queries x keys).
Var multi_head_attention(Tape& tape, ParameterStore& store, const std::string& prefix, Var query,
                         Var memory, std::size_t heads, std::size_t head_dim,
                         const Matrix* mask = nullptr);

/// Layer normalization with parameters `<prefix>.g` and `<prefix>.b`.
Var layer_norm(Tape& tape, ParameterStore& store, const std::string& prefix, Var x);

/// Two width-3 convolutions over positions with a ReLU between. Causal
/// convolutions only look at the current and two previous positions.
/// `row_mask` (rows x 1, 0 or 1) zeroes padded rows before each convolution.
Var conv_ffn(Tape& tape, ParameterStore& store, const std::string& prefix, Var x, bool causal,
             const Var* row_mask = nullptr);

}  // namespace grec::model
