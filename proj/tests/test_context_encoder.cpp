#include <gtest/gtest.h>

#include <cmath>

#include "grec/context_encoder.hpp"
#include "grec/error.hpp"
#include "grec/gradcheck.hpp"
#include "support.hpp"

using namespace grec;
using namespace grec::model;
using grec::testing::random_matrix;

namespace {

ModelConfig encoder_config() {
  ModelConfig c = grec::testing::tiny_config();
  c.vocab_size = 12;
  c.d_model = 8;
  c.heads = 2;
  c.head_dim = 4;
  c.filters = 6;
  c.encoder_layers = 2;
  return c;
}

ParameterStore encoder_params(const ModelConfig& c, std::uint64_t seed = 3) {
  ParameterStore s;
  add_embedding_params(s, c, seed);
  add_context_encoder_params(s, c, seed);
  return s;
}

ContextInput input_of(std::vector<int> tokens) {
  ContextInput in;
  in.tokens = tokens;
  in.buckets.assign(tokens.size(), 0);
  in.states.assign(tokens.size(), 1);
  in.states[0] = data::kStateCls;
  for (std::size_t i = 1; i < tokens.size(); ++i) in.buckets[i] = static_cast<int>(i % 3);
  return in;
}

}  // namespace

TEST(EncodeContext, ClsOnly) {
  auto c = encoder_config();
  auto s = encoder_params(c);
  Tape t;
  auto enc = encode_context(t, s, c, input_of({0}));
  EXPECT_EQ(enc.states.rows(), 1u);
  EXPECT_EQ(enc.states.cols(), c.d_model);
  EXPECT_EQ(enc.cls.value(), enc.states.value());
}

TEST(EncodeContext, LengthMismatchRejected) {
  auto c = encoder_config();
  auto s = encoder_params(c);
  Tape t;
  auto in = input_of({0, 5, 6});
  in.buckets.pop_back();
  EXPECT_THROW(encode_context(t, s, c, in), Error);
  EXPECT_THROW(encode_context(t, s, c, ContextInput{}), Error);
}

TEST(EncodeContext, ZeroedLayersReduceToNormalizedEmbeddings) {
  auto c = encoder_config();
  auto s = encoder_params(c);
  for (auto& p : s) {
    const bool gain = p.name.size() > 2 && p.name.compare(p.name.size() - 2, 2, ".g") == 0;
    if (p.name != "emb.word" && !gain) p.value.fill(0.0);
  }
  const std::vector<int> tokens = {0, 7, 3, 9, 9};
  Tape t;
  auto enc = encode_context(t, s, c, input_of(tokens));
  const Matrix pe = sinusoidal_positions(tokens.size(), c.d_model);
  const Matrix& word = s.get("emb.word").value;
  for (std::size_t r = 0; r < tokens.size(); ++r) {
    std::vector<double> e(c.d_model);
    double mean = 0;
    for (std::size_t k = 0; k < c.d_model; ++k) {
      e[k] = word(static_cast<std::size_t>(tokens[r]), k) + pe(r, k);
      mean += e[k] / static_cast<double>(c.d_model);
    }
    double var = 0;
    for (double v : e) var += (v - mean) * (v - mean) / static_cast<double>(c.d_model);
    for (std::size_t k = 0; k < c.d_model; ++k)
      EXPECT_NEAR(enc.states.value()(r, k), (e[k] - mean) / std::sqrt(var + 1e-6), 1e-12);
  }
}

TEST(EncodeContext, DeterministicBitwise) {
  auto c = encoder_config();
  auto s1 = encoder_params(c, 9), s2 = encoder_params(c, 9);
  Tape t1, t2;
  auto a = encode_context(t1, s1, c, input_of({0, 5, 6, 7, 8}));
  auto b = encode_context(t2, s2, c, input_of({0, 5, 6, 7, 8}));
  EXPECT_EQ(a.states.value(), b.states.value());
}

TEST(EncodeContext, PaddingDoesNotLeak) {
  auto c = encoder_config();
  auto s = encoder_params(c);
  auto in1 = input_of({0, 5, 6, 7, 3, 3});
  in1.mask = {1, 1, 1, 1, 0, 0};
  auto in2 = in1;
  in2.tokens[4] = 11;
  in2.tokens[5] = 8;
  in2.buckets[5] = 3;
  Tape t;
  auto a = encode_context(t, s, c, in1);
  auto b = encode_context(t, s, c, in2);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t k = 0; k < c.d_model; ++k) EXPECT_EQ(a.states.value()(r, k), b.states.value()(r, k));
}

TEST(PredictEmotion, ZeroWeightsAreUniform) {
  auto c = encoder_config();
  auto s = encoder_params(c);
  s.get("emotion.w").value.fill(0.0);
  Tape t;
  auto q = predict_emotion(t, s, encode_context(t, s, c, input_of({0, 5})));
  ASSERT_EQ(q.cols(), 32u);
  for (double v : q.value().data()) EXPECT_NEAR(v, 1.0 / 32.0, 1e-15);
}

TEST(PredictEmotion, SaturatesAndMatchesHandSoftmax) {
  auto c = encoder_config();
  auto s = encoder_params(c);
  Tape t;
  auto enc = encode_context(t, s, c, input_of({0, 5, 6}));
  const Matrix& q = enc.cls.value();

  auto& w = s.get("emotion.w").value;
  w.fill(0.0);
  for (std::size_t k = 0; k < c.d_model; ++k) {
    w(k, 3) = 0.7 * static_cast<double>(k) - 1.0;
    w(k, 10) = 0.2;
  }
  double l3 = 0, l10 = 0;
  for (std::size_t k = 0; k < c.d_model; ++k) {
    l3 += q(0, k) * w(k, 3);
    l10 += q(0, k) * w(k, 10);
  }
  const double z = 30.0 + std::exp(l3) + std::exp(l10);
  Tape t2;
  auto p = predict_emotion(t2, s, encode_context(t2, s, c, input_of({0, 5, 6})));
  double sum = 0;
  for (std::size_t j = 0; j < 32; ++j) {
    const double expected = j == 3 ? std::exp(l3) / z : j == 10 ? std::exp(l10) / z : 1.0 / z;
    EXPECT_NEAR(p.value()(0, j), expected, 1e-12);
    sum += p.value()(0, j);
  }
  EXPECT_NEAR(sum, 1.0, 1e-6);

  // one dominant logit
  w.fill(0.0);
  for (std::size_t k = 0; k < c.d_model; ++k) w(k, 7) = 1e4 * q(0, k);
  Tape t3;
  auto hot = predict_emotion(t3, s, encode_context(t3, s, c, input_of({0, 5, 6})));
  EXPECT_NEAR(hot.value()(0, 7), 1.0, 1e-6);
}

TEST(EncodeContext, CausalEmbeddingFrozenOthersLearn) {
  auto c = encoder_config();
  c.encoder_layers = 1;
  auto s = encoder_params(c);
  const auto in = input_of({0, 5, 6, 7});
  const Matrix w = random_matrix(4, c.d_model, 17);
  nn::LossFunction loss = [&](ParameterStore& st, nn::GradBuffer* g) {
    Tape t;
    auto enc = encode_context(t, st, c, in);
    Var l = nn::add(nn::sum_all(nn::mul(enc.states, t.constant(w))),
                    nn::sum_all(nn::log_softmax_rows(emotion_logits(t, st, enc))));
    if (g) {
      t.backward(l);
      t.accumulate(st, *g);
    }
    return l.value()(0, 0);
  };
  auto grads = s.zero_grads();
  loss(s, &grads);
  auto l1 = [](const Matrix& m) {
    double a = 0;
    for (double v : m.data()) a += std::abs(v);
    return a;
  };
  EXPECT_EQ(l1(grads[s.index_of("emb.cas")]), 0.0);
  EXPECT_GT(l1(grads[s.index_of("emb.word")]), 0.0);
  EXPECT_GT(l1(grads[s.index_of("emb.state")]), 0.0);

  nn::GradientCheckOptions opt;
  opt.sample_per_param = 40;
  opt.epsilon = 1e-5;
  auto report = nn::gradient_check(loss, s, opt);
  EXPECT_TRUE(report.passed) << report.worst_param << " " << report.max_rel_error;
  bool saw_cas = false, saw_word = false, saw_state = false;
  for (const auto& p : report.params) {
    saw_cas = saw_cas || p.name == "emb.cas";
    saw_word = saw_word || p.name == "emb.word";
    saw_state = saw_state || p.name == "emb.state";
  }
  EXPECT_FALSE(saw_cas);
  EXPECT_TRUE(saw_word);
  EXPECT_TRUE(saw_state);
}
