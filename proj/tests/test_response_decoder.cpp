#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "grec/error.hpp"
#include "grec/gradcheck.hpp"
#include "grec/response_decoder.hpp"
#include "grec/training.hpp"
#include "reference_graph.hpp"
#include "support.hpp"

using namespace grec;
using namespace grec::model;
using graph::CausalityGraph;
using graph::Role;
using grec::testing::random_matrix;

namespace {

ModelConfig decoder_config() {
  ModelConfig c = grec::testing::tiny_config();
  c.vocab_size = 10;
  c.d_model = 8;
  c.head_dim = 4;
  c.filters = 6;
  c.d_graph = 3;
  c.word_dim = 4;
  return c;
}

ParameterStore full_params(const ModelConfig& c, std::uint64_t seed = 5) {
  ParameterStore s;
  add_embedding_params(s, c, seed);
  add_context_encoder_params(s, c, seed);
  add_fusion_params(s, c, seed);
  add_decoder_params(s, c, seed);
  add_output_params(s, c, seed);
  return s;
}

EncodedContext context_of(Tape& t, ParameterStore& s, const ModelConfig& c) {
  ContextInput in;
  in.tokens = {data::Vocabulary::kCls, 5, 6, 7};
  in.buckets = {0, 1, 0, 2};
  in.states = {data::kStateCls, 0, 1, 1};
  return encode_context(t, s, c, in);
}

EncodedGraph pooled_only(Tape& t, Matrix pooled) {
  EncodedGraph g;
  g.pooled = t.constant(std::move(pooled));
  return g;
}

CausalityGraph chain(std::vector<int> depths, std::vector<std::pair<int, int>> edges) {
  CausalityGraph g;
  for (std::size_t i = 0; i < depths.size(); ++i)
    g.nodes.push_back({"n" + std::to_string(i), depths[i] == 0 ? Role::Cause : Role::Intermediate, depths[i]});
  for (auto [s, d] : edges) g.edges.push_back({s, "r", d, g.nodes[static_cast<std::size_t>(d)].depth});
  return g;
}

std::vector<double> scores_at(const std::vector<Var>& scores, std::size_t step) {
  std::vector<double> out;
  for (const auto& v : scores) out.push_back(v.value()(0, step));
  return out;
}

// Depth-ordered recursion over the node list, written independently.
std::vector<double> naive_propagation(const CausalityGraph& g, const Matrix& rel, std::size_t step,
                                      double gamma) {
  std::vector<double> s(g.nodes.size(), 0.0);
  std::function<double(std::size_t)> score = [&](std::size_t i) -> double {
    const int d = g.nodes[i].depth;
    if (d == 0) return 1.0;
    double sum = 0;
    int n = 0;
    for (std::size_t k = 0; k < g.edges.size(); ++k) {
      const auto& e = g.edges[k];
      const std::size_t a = static_cast<std::size_t>(e.src), b = static_cast<std::size_t>(e.dst);
      std::size_t other;
      if (b == i) other = a;
      else if (a == i) other = b;
      else continue;
      if (g.nodes[other].depth >= d) continue;
      sum += gamma * score(other) + rel(k, step);
      ++n;
    }
    return n == 0 ? 0.0 : sum / n;
  };
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = score(i);
  return s;
}

}  // namespace

TEST(Fusion, NoGraphsGiveZeros) {
  auto c = decoder_config();
  auto s = full_params(c);
  Tape t;
  Var h = fuse_causality(t, s, c, {});
  ASSERT_EQ(h.cols(), c.d_model);
  for (double v : h.value().data()) EXPECT_EQ(v, 0.0);
}

TEST(Fusion, ZeroWeightsGiveHalf) {
  auto c = decoder_config();
  auto s = full_params(c);
  for (auto& p : s)
    if (p.name.rfind("fuse.", 0) == 0) p.value.fill(0.0);
  Tape t;
  std::vector<EncodedGraph> gs = {pooled_only(t, random_matrix(1, 9, 1)), pooled_only(t, random_matrix(1, 9, 2))};
  Var h = fuse_causality(t, s, c, gs);
  for (double v : h.value().data()) EXPECT_EQ(v, 0.5);
}

TEST(Fusion, TiedDirectionsMirrorUnderReversal) {
  auto c = decoder_config();
  auto s = full_params(c);
  for (auto& p : s)
    if (p.name.rfind("fuse.bwd.", 0) == 0) p.value = s.get("fuse.fwd." + p.name.substr(9)).value;
  Tape t;
  std::vector<Var> xs = {t.constant(random_matrix(1, 9, 3)), t.constant(random_matrix(1, 9, 4)),
                         t.constant(random_matrix(1, 9, 5))};
  std::vector<Var> rev(xs.rbegin(), xs.rend());
  auto a = bigru(t, s, "fuse.fwd", "fuse.bwd", xs, c.d_graph);
  auto b = bigru(t, s, "fuse.fwd", "fuse.bwd", rev, c.d_graph);
  EXPECT_EQ(a.forward.value(), b.backward.value());
  EXPECT_EQ(a.backward.value(), b.forward.value());
  EXPECT_THROW(bigru(t, s, "fuse.fwd", "fuse.bwd", {}, c.d_graph), Error);
}

TEST(GruCell, ZeroWeightsHalveState) {
  auto c = decoder_config();
  auto s = full_params(c);
  for (auto& p : s)
    if (p.name.rfind("fuse.fwd.", 0) == 0) p.value.fill(0.0);
  Tape t;
  Var h = gru_cell(t, s, "fuse.fwd", t.constant(Matrix::row({0.4, -2, 1})), t.constant(random_matrix(1, 9, 2)));
  EXPECT_EQ(h.value(), Matrix::row({0.2, -1, 0.5}));
}

TEST(Decoder, ZeroCausalityMatchesNoInjection) {
  auto c = decoder_config();
  auto s = full_params(c);
  Tape t;
  auto ctx = context_of(t, s, c);
  const std::vector<int> in = {data::Vocabulary::kSos, 5, 8};
  Var a = decoder_states(t, s, c, in, t.constant(Matrix(1, c.d_model)), ctx);
  Var b = decoder_states(t, s, c, in, Var{}, ctx);
  EXPECT_EQ(a.value(), b.value());
  Var d = decoder_states(t, s, c, in, t.constant(random_matrix(1, c.d_model, 4)), ctx);
  EXPECT_NE(a.value(), d.value());
}

TEST(Decoder, CausalMaskHidesTheFuture) {
  auto c = decoder_config();
  auto s = full_params(c);
  Tape t;
  auto ctx = context_of(t, s, c);
  Var hq = t.constant(random_matrix(1, c.d_model, 7));
  Var a = decoder_states(t, s, c, {data::Vocabulary::kSos, 5, 8, 9}, hq, ctx);
  Var b = decoder_states(t, s, c, {data::Vocabulary::kSos, 5, 6, 4}, hq, ctx);
  for (std::size_t k = 0; k < c.d_model; ++k) {
    EXPECT_EQ(a.value()(0, k), b.value()(0, k));
    EXPECT_EQ(a.value()(1, k), b.value()(1, k));
  }
  Var step = decoder_step(t, s, c, {data::Vocabulary::kSos, 5}, hq, ctx);
  for (std::size_t k = 0; k < c.d_model; ++k) EXPECT_EQ(step.value()(0, k), a.value()(1, k));
}

TEST(Decoder, RejectsBadPrefixes) {
  auto c = decoder_config();
  auto s = full_params(c);
  Tape t;
  auto ctx = context_of(t, s, c);
  EXPECT_THROW(decoder_states(t, s, c, {5, 6}, Var{}, ctx), Error);
  EXPECT_THROW(decoder_states(t, s, c, std::vector<int>(c.max_decode_len + 1, data::Vocabulary::kSos), Var{}, ctx),
               Error);
}

TEST(Decoder, ZeroedSublayersReduceToNormalizedInput) {
  auto c = decoder_config();
  c.decoder_layers = 2;
  auto s = full_params(c);
  for (auto& p : s)
    if (p.name.rfind("dec.", 0) == 0 && p.name.compare(p.name.size() - 2, 2, ".g") != 0) p.value.fill(0.0);
  Tape t;
  auto ctx = context_of(t, s, c);
  const Matrix hq = random_matrix(1, c.d_model, 8);
  const std::vector<int> in = {data::Vocabulary::kSos, 7, 3};
  Var out = decoder_states(t, s, c, in, t.constant(hq), ctx);
  const Matrix pe = sinusoidal_positions(in.size(), c.d_model);
  const Matrix& word = s.get("emb.word").value;
  for (std::size_t r = 0; r < in.size(); ++r) {
    std::vector<double> x(c.d_model);
    double mean = 0, var = 0;
    for (std::size_t k = 0; k < c.d_model; ++k) {
      x[k] = word(static_cast<std::size_t>(in[r]), k) + pe(r, k) + (r == 0 ? hq(0, k) : 0.0);
      mean += x[k] / static_cast<double>(c.d_model);
    }
    for (double v : x) var += (v - mean) * (v - mean) / static_cast<double>(c.d_model);
    for (std::size_t k = 0; k < c.d_model; ++k)
      EXPECT_NEAR(out.value()(r, k), (x[k] - mean) / std::sqrt(var + 1e-6), 1e-12);
  }
}

TEST(GenericDistribution, BiasOnlySoftmax) {
  ModelConfig c = decoder_config();
  c.vocab_size = 3;
  ParameterStore s;
  add_output_params(s, c, 1);
  s.get("out.bias").value = Matrix::row({0, std::log(2.0), std::log(4.0)});
  Tape t;
  Var p = generic_distribution(t, s, t.constant(random_matrix(2, c.d_model, 3)));
  for (std::size_t r = 0; r < 2; ++r) {
    EXPECT_NEAR(p.value()(r, 0), 1.0 / 7.0, 1e-15);
    EXPECT_NEAR(p.value()(r, 1), 2.0 / 7.0, 1e-15);
    EXPECT_NEAR(p.value()(r, 2), 4.0 / 7.0, 1e-15);
  }
  s.get("out.bias").value.fill(0.0);
  Var u = generic_distribution(t, s, t.constant(random_matrix(1, c.d_model, 3)));
  for (double v : u.value().data()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(TripleRelevance, SigmoidOfBilinearScore) {
  ModelConfig c = decoder_config();
  c.d_graph = 1;
  c.d_model = 2;
  ParameterStore s;
  add_output_params(s, c, 1);
  s.get("pointer.rel").value = Matrix(3, 2, std::vector<double>{1, 0, 1, 0, 1, 0});
  Tape t;
  EncodedGraph g;
  g.triples = t.constant(Matrix(2, 3, std::vector<double>{1, 2, 3, 0, 0, 0}));
  Var r = triple_relevance(t, s, g, t.constant(Matrix(2, 2, std::vector<double>{1, 0, 0, 1})));
  ASSERT_EQ(r.rows(), 2u);
  ASSERT_EQ(r.cols(), 2u);
  EXPECT_NEAR(r.value()(0, 0), 0.9975273768433653, 1e-12);
  EXPECT_NEAR(r.value()(0, 1), 0.5, 1e-15);
  EXPECT_NEAR(r.value()(1, 0), 0.5, 1e-15);
  s.get("pointer.rel").value.fill(0.0);
  EXPECT_EQ(triple_relevance(t, s, g, t.constant(Matrix::row({3, 1}))).value()(0, 0), 0.5);
  EXPECT_FALSE(triple_relevance(t, s, EncodedGraph{}, t.constant(Matrix::row({3, 1}))).valid());
}

TEST(Propagation, HandCases) {
  Tape t;
  auto lone = chain({0}, {});
  EXPECT_EQ(scores_at(propagate_scores(t, lone, Var{}, 1, 0.5), 0), (std::vector<double>{1.0}));

  auto path = chain({0, 1, 2}, {{0, 1}, {1, 2}});
  auto half = t.constant(Matrix(2, 1, std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(scores_at(propagate_scores(t, path, half, 1, 0.5), 0), (std::vector<double>{1, 1, 1}));

  auto two_parents = chain({0, 0, 1}, {{0, 2}, {1, 2}});
  auto rel = t.constant(Matrix(2, 1, std::vector<double>{0.2, 0.8}));
  EXPECT_NEAR(scores_at(propagate_scores(t, two_parents, rel, 1, 0.5), 0)[2], 1.0, 1e-15);

  EXPECT_EQ(scores_at(propagate_scores(t, path, half, 1, 0.0), 0), (std::vector<double>{1, 0.5, 0.5}));
  EXPECT_THROW(propagate_scores(t, path, half, 1, 1.5), Error);

  // a same-depth edge contributes nothing; an unreachable node scores 0
  auto side = chain({0, 1, 1, 2}, {{0, 1}, {1, 2}});
  auto r2 = t.constant(Matrix(2, 1, std::vector<double>{0.3, 0.9}));
  auto sc = scores_at(propagate_scores(t, side, r2, 1, 0.5), 0);
  EXPECT_NEAR(sc[1], 0.8, 1e-15);
  EXPECT_EQ(sc[2], 0.0);
  EXPECT_EQ(sc[3], 0.0);
}

TEST(Propagation, MatchesNaiveRecursionAndIgnoresEdgeOrder) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    auto f = grec::testing::random_fixture(seed);
    auto g = graph::build_graph(f.store, f.concepts, f.K, f.H);
    if (g.edges.empty()) continue;
    const std::size_t steps = 3;
    const Matrix rel = random_matrix(g.edges.size(), steps, seed, 1.0);
    const double gamma = 0.3 + 0.1 * static_cast<double>(seed % 5);
    Tape t;
    auto got = propagate_scores(t, g, t.constant(rel), steps, gamma);

    CausalityGraph rg = g;
    Matrix rrel(rel.rows(), rel.cols());
    for (std::size_t k = 0; k < g.edges.size(); ++k) {
      const std::size_t to = g.edges.size() - 1 - k;
      rg.edges[to] = g.edges[k];
      for (std::size_t j = 0; j < steps; ++j) rrel(to, j) = rel(k, j);
    }
    auto rev = propagate_scores(t, rg, t.constant(rrel), steps, gamma);
    for (std::size_t j = 0; j < steps; ++j) {
      const auto expected = naive_propagation(g, rel, j, gamma);
      const auto a = scores_at(got, j);
      const auto b = scores_at(rev, j);
      for (std::size_t i = 0; i < expected.size(); ++i) {
        EXPECT_NEAR(a[i], expected[i], 1e-12) << "seed " << seed;
        EXPECT_NEAR(b[i], expected[i], 1e-12) << "seed " << seed;
      }
    }
  }
}

TEST(ConceptDistribution, SoftmaxOverSummedScores) {
  Tape t;
  auto g1 = chain({0, 1}, {{0, 1}});
  auto g2 = chain({0}, {});
  g2.nodes[0].token = "n1";
  std::vector<const CausalityGraph*> gs = {&g1, &g2};
  std::vector<std::vector<Var>> scores = {{t.constant(Matrix::row({0.0})), t.constant(Matrix::row({0.25 * std::log(2.0)}))},
                                          {t.constant(Matrix::row({0.75 * std::log(2.0)}))}};
  auto d = concept_distribution(t, gs, scores, {{4, 7}, {7}});
  ASSERT_EQ(d.tokens, (std::vector<std::string>{"n0", "n1"}));
  EXPECT_EQ(d.vocab_ids, (std::vector<int>{4, 7}));
  EXPECT_NEAR(d.probs.value()(0, 0), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(d.probs.value()(0, 1), 2.0 / 3.0, 1e-15);

  auto dropped = concept_distribution(t, gs, scores, {{-1, -1}, {-1}});
  EXPECT_TRUE(dropped.empty());
}

TEST(Mixture, GateExtremesAndHalfway) {
  ModelConfig c = decoder_config();
  c.vocab_size = 4;
  ParameterStore s;
  add_output_params(s, c, 1);
  Tape t;
  Var generic = t.constant(Matrix::row({0.25, 0.25, 0.25, 0.25}));
  Var states = t.constant(random_matrix(1, c.d_model, 2));
  ConceptDistribution cd;
  cd.tokens = {"x"};
  cd.vocab_ids = {2};
  cd.scores = t.constant(Matrix::row({0.3}));
  cd.probs = nn::softmax_rows(cd.scores);

  s.get("pointer.gate_bias").value(0, 0) = 0.0;
  auto m = mix_distributions(t, s, generic, cd, states);
  EXPECT_EQ(m.mixed.value(), Matrix::row({0.125, 0.125, 0.625, 0.125}));
  EXPECT_EQ(m.gate.value()(0, 0), 0.5);

  s.get("pointer.gate_bias").value(0, 0) = -1e3;
  const Matrix low = mix_distributions(t, s, generic, cd, states).mixed.value();
  EXPECT_EQ(low, generic.value());
  s.get("pointer.gate_bias").value(0, 0) = 1e3;
  const Matrix high = mix_distributions(t, s, generic, cd, states).mixed.value();
  EXPECT_EQ(high, Matrix::row({0, 0, 1, 0}));

  auto empty = mix_distributions(t, s, generic, ConceptDistribution{}, states);
  EXPECT_EQ(empty.mixed.value(), generic.value());
  EXPECT_EQ(empty.gate.value()(0, 0), 0.0);

  cd.vocab_ids = {4};
  EXPECT_THROW(mix_distributions(t, s, generic, cd, states), Error);
}

TEST(Mixture, InitialGateIsOnePercent) {
  ModelConfig c = decoder_config();
  ParameterStore s;
  add_output_params(s, c, 1);
  const double b = s.get("pointer.gate_bias").value(0, 0);
  EXPECT_NEAR(1.0 / (1.0 + std::exp(-b)), 0.01, 1e-12);
}

TEST(FullModel, MixedNllGradientsPassCheck) {
  synth::SyntheticOptions o;
  o.train = 3;
  o.dim = 4;
  auto corpus = grec::testing::make_corpus(o);
  auto cfg = corpus->config;
  cfg.d_model = 8;
  cfg.head_dim = 4;
  cfg.filters = 4;
  cfg.d_graph = 3;
  Model m(cfg, 11);
  for (auto& p : m.params())
    if (p.name == "out.voc" || p.name == "out.bias" || p.name == "pointer.gate") p.value = random_matrix(p.value.rows(), p.value.cols(), 19, 0.5);
  m.params().get("pointer.gate_bias").value(0, 0) = 0.0;
  const auto& ex = corpus->train_set.at(0);
  ASSERT_FALSE(ex.graphs.empty());
  nn::LossFunction loss = [&](nn::ParameterStore&, nn::GradBuffer* g) {
    Tape t;
    auto l = train::forward_example(m, t, ex, 1.0);
    if (g) {
      t.backward(l.total);
      t.accumulate(m.params(), *g);
    }
    return l.total.value()(0, 0);
  };
  nn::GradientCheckOptions opt;
  opt.sample_per_param = 32;
  opt.epsilon = 1e-5;
  auto r = nn::gradient_check(loss, m.params(), opt);
  EXPECT_TRUE(r.passed) << r.worst_param << " " << r.max_rel_error;
}
