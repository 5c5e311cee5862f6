#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <random>
#include <sstream>

#include "grec/error.hpp"
#include "grec/kg_store.hpp"
#include "support.hpp"

using namespace grec;
using namespace grec::kg;
using grec::testing::TempDir;
using grec::testing::write_file;

namespace {

std::string embeddings_for(const std::vector<std::string>& tokens, std::size_t dim = 3) {
  std::ostringstream out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    out << tokens[i];
    for (std::size_t d = 0; d < dim; ++d) out << ' ' << (d == i % dim ? 1.0 : 0.1 * (d + 1));
    out << '\n';
  }
  return out.str();
}

}  // namespace

TEST(LoadStore, ThreeTriplesAllEmbedded) {
  TempDir dir;
  write_file(dir / "a.tsv", "r1\ta\tb\nr2\tc\ta\t2.0\nr1\tb\tc\t0.5\n");
  write_file(dir / "e.txt", embeddings_for({"a", "b", "c"}));
  auto store = load_store(dir / "a.tsv", dir / "e.txt");
  EXPECT_EQ(store.triples().size(), 3u);
  EXPECT_EQ(store.report().kept, 3u);
  EXPECT_EQ(store.report().dropped(), 0u);
  EXPECT_EQ(store.concepts(), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(store.relations(), (std::vector<std::string>{"r1", "r2"}));
}

TEST(LoadStore, TailWithoutEmbeddingIsDropped) {
  TempDir dir;
  write_file(dir / "a.tsv", "r1\ta\tghost\n");
  write_file(dir / "e.txt", embeddings_for({"a"}));
  LoadOptions opt;
  opt.allow_empty = true;
  auto store = load_store(dir / "a.tsv", dir / "e.txt", opt);
  EXPECT_EQ(store.triples().size(), 0u);
  EXPECT_EQ(store.report().missing_embedding, 1u);
  EXPECT_EQ(store.report().dropped(), 1u);
  EXPECT_THROW(load_store(dir / "a.tsv", dir / "e.txt"), Error);
}

TEST(LoadStore, MinWeightFilterMatchesLineScan) {
  TempDir dir;
  std::mt19937_64 rng(5);
  std::vector<std::string> tokens;
  for (int i = 0; i < 60; ++i) tokens.push_back("w" + std::to_string(i));
  std::ostringstream body;
  std::vector<int> below(1000, 0);
  for (int i = 0; i < 400; ++i) below[static_cast<std::size_t>(i)] = 1;
  std::shuffle(below.begin(), below.end(), rng);
  for (int i = 0; i < 1000; ++i) {
    // unique (head, tail) pairs so no duplicates
    const int h = i / 60, t = i % 60;
    const double w = below[static_cast<std::size_t>(i)] ? 0.25 + 0.5 * (i % 3) / 3.0 : 1.0 + (i % 4);
    body << "rel" << (i % 4) << '\t' << tokens[static_cast<std::size_t>(h)] << '\t'
         << tokens[static_cast<std::size_t>(t)] << '\t' << w << '\n';
  }
  write_file(dir / "a.tsv", body.str());
  write_file(dir / "e.txt", embeddings_for(tokens, 5));

  // independent line scan of the fixture
  std::istringstream scan(body.str());
  std::string line;
  std::size_t expected = 0;
  while (std::getline(scan, line)) {
    const double w = std::stod(line.substr(line.rfind('\t') + 1));
    if (w >= 1.0) ++expected;
  }
  ASSERT_EQ(expected, 600u);

  LoadOptions opt;
  opt.min_weight = 1.0;
  auto store = load_store(dir / "a.tsv", dir / "e.txt", opt);
  EXPECT_EQ(store.triples().size(), expected);
  EXPECT_EQ(store.report().below_weight, 400u);
}

TEST(LoadStore, MultiWordAndUppercase) {
  TempDir dir;
  write_file(dir / "a.tsv", "# comment\nr\tice cream\tb\nr\tA\tB\n");
  write_file(dir / "e.txt", embeddings_for({"a", "b"}));
  auto store = load_store(dir / "a.tsv", dir / "e.txt");
  EXPECT_EQ(store.report().multi_word, 1u);
  ASSERT_EQ(store.triples().size(), 1u);
  EXPECT_EQ(store.triples()[0].head, "a");
}

TEST(LoadStore, MalformedLineReportsLineNumber) {
  TempDir dir;
  write_file(dir / "a.tsv", "r\ta\tb\nbroken line\n");
  write_file(dir / "e.txt", embeddings_for({"a", "b"}));
  try {
    load_store(dir / "a.tsv", dir / "e.txt");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  write_file(dir / "a.tsv", "r\ta\tb\tnotanumber\n");
  EXPECT_THROW(load_store(dir / "a.tsv", dir / "e.txt"), ParseError);
}

TEST(LoadStore, InconsistentEmbeddingDimension) {
  TempDir dir;
  write_file(dir / "a.tsv", "r\ta\tb\n");
  write_file(dir / "e.txt", "a 1 0 0\nb 1 0\n");
  try {
    load_store(dir / "a.tsv", dir / "e.txt");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  write_file(dir / "e.txt", "a 1 x 0\n");
  EXPECT_THROW(EmbeddingTable::load(dir / "e.txt"), ParseError);
}

TEST(Neighbors, NoEdgesOrUnknownConcept) {
  TempDir dir;
  write_file(dir / "a.tsv", "r\ta\tb\n");
  write_file(dir / "e.txt", embeddings_for({"a", "b", "lonely"}));
  auto store = load_store(dir / "a.tsv", dir / "e.txt");
  EXPECT_TRUE(store.neighbors("lonely").empty());
  EXPECT_TRUE(store.neighbors("nothing").empty());
}

TEST(Neighbors, TwoTripleFixtureReadBack) {
  TempDir dir;
  write_file(dir / "a.tsv", "r2\tc\ta\nr1\ta\tb\n");
  write_file(dir / "e.txt", embeddings_for({"a", "b", "c"}));
  auto store = load_store(dir / "a.tsv", dir / "e.txt");
  const std::vector<Neighbor> expected = {{"r1", "b", Direction::Out}, {"r2", "c", Direction::In}};
  EXPECT_EQ(store.neighbors("a"), expected);
  EXPECT_EQ(store.neighbors("b"), (std::vector<Neighbor>{{"r1", "a", Direction::In}}));
}

TEST(Neighbors, OrderedByNeighborThenRelation) {
  TempDir dir;
  write_file(dir / "a.tsv", "zz\ta\tb\naa\ta\tb\nmm\tc\ta\nmm\ta\tc\n");
  write_file(dir / "e.txt", embeddings_for({"a", "b", "c"}));
  auto store = load_store(dir / "a.tsv", dir / "e.txt");
  const std::vector<Neighbor> expected = {{"aa", "b", Direction::Out},
                                          {"zz", "b", Direction::Out},
                                          {"mm", "c", Direction::Out},
                                          {"mm", "c", Direction::In}};
  EXPECT_EQ(store.neighbors("a"), expected);
}

TEST(Neighbors, DuplicateTripleIsSingleEntry) {
  TempDir dir;
  write_file(dir / "a.tsv", "r\ta\tb\nr\ta\tb\t3\n");
  write_file(dir / "e.txt", embeddings_for({"a", "b"}));
  auto store = load_store(dir / "a.tsv", dir / "e.txt");
  EXPECT_EQ(store.triples().size(), 1u);
  EXPECT_EQ(store.report().duplicates, 1u);
  EXPECT_EQ(store.neighbors("a").size(), 1u);
}

TEST(Neighbors, MultisetIsTwiceTheTriplesAndSymmetric) {
  TempDir dir;
  std::mt19937_64 rng(3);
  std::vector<std::string> tokens;
  for (int i = 0; i < 25; ++i) tokens.push_back("c" + std::to_string(i));
  std::ostringstream body;
  for (int i = 0; i < 150; ++i)
    body << "r" << rng() % 4 << '\t' << tokens[rng() % 25] << '\t' << tokens[rng() % 25] << '\n';
  write_file(dir / "a.tsv", body.str());
  write_file(dir / "e.txt", embeddings_for(tokens, 4));
  auto store = load_store(dir / "a.tsv", dir / "e.txt");

  std::map<std::tuple<std::string, std::string, std::string>, int> from_neighbors;
  std::size_t total = 0;
  for (const auto& c : store.concepts()) {
    for (const auto& n : store.neighbors(c)) {
      ++total;
      if (n.direction == Direction::Out)
        ++from_neighbors[{c, n.relation, n.target}];
      else
        ++from_neighbors[{n.target, n.relation, c}];
      // the same edge is visible from the other endpoint
      const auto back = store.neighbors(n.target);
      const Neighbor mirror{n.relation, c, n.direction == Direction::Out ? Direction::In : Direction::Out};
      EXPECT_NE(std::find(back.begin(), back.end(), mirror), back.end());
    }
  }
  EXPECT_EQ(total, 2 * store.triples().size());
  for (const auto& t : store.triples()) EXPECT_EQ((from_neighbors[{t.head, t.relation, t.tail}]), 2);
}

TEST(LoadStore, ReloadIsDeterministic) {
  TempDir dir;
  write_file(dir / "a.tsv", "r2\tc\ta\nr1\ta\tb\nr1\tb\tc\n");
  write_file(dir / "e.txt", embeddings_for({"a", "b", "c"}));
  auto s1 = load_store(dir / "a.tsv", dir / "e.txt");
  auto s2 = load_store(dir / "a.tsv", dir / "e.txt");
  EXPECT_EQ(s1.triples(), s2.triples());
  EXPECT_EQ(s1.concepts(), s2.concepts());
  EXPECT_EQ(s1.hash(), s2.hash());
  for (const auto& c : s1.concepts()) EXPECT_EQ(s1.neighbors(c), s2.neighbors(c));
}

TEST(Cosine, IdentityOrthogonalAndDiagonal) {
  EmbeddingTable t(2);
  t.add("x", {1, 0});
  t.add("y", {0, 1});
  t.add("z", {1, 1});
  t.add("zero", {0, 0});
  EXPECT_EQ(cosine_similarity("x", "x", t), 1.0);
  EXPECT_EQ(cosine_similarity("z", "z", t), 1.0);
  EXPECT_EQ(cosine_similarity("x", "y", t), 0.0);
  EXPECT_NEAR(cosine_similarity("x", "z", t), 1.0 / std::sqrt(2.0), 1e-9);
  EXPECT_THROW(cosine_similarity("x", "missing", t), Error);
  EXPECT_THROW(cosine_similarity("x", "zero", t), Error);
  try {
    cosine_similarity("x", "missing", t);
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("missing"), std::string::npos);
  }
}

TEST(Cosine, SymmetricToTheLastBit) {
  EmbeddingTable t(7);
  auto m = grec::testing::random_matrix(40, 7, 77);
  for (std::size_t i = 0; i < 40; ++i)
    t.add("t" + std::to_string(i), std::vector<double>(m.row_span(i).begin(), m.row_span(i).end()));
  for (std::size_t i = 0; i < 40; ++i)
    for (std::size_t j = 0; j < 40; ++j) {
      const auto a = "t" + std::to_string(i), b = "t" + std::to_string(j);
      const double ab = cosine_similarity(a, b, t), ba = cosine_similarity(b, a, t);
      EXPECT_EQ(std::memcmp(&ab, &ba, sizeof(double)), 0);
      EXPECT_LE(std::abs(ab), 1.0);
    }
}
