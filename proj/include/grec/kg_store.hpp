#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "grec/tensor.hpp"

namespace grec::kg {

/// Dense word vectors keyed by token. Every row has the same dimension.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dimension) : dimension_(dimension) {}

  /// Reads `token v1 ... vD` lines. Inconsistent dimensions or unparsable
  /// numbers raise ParseError with the line number.
  static EmbeddingTable load(const std::filesystem::path& path);

  void add(const std::string& token, std::vector<double> vector);

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return tokens_.size(); }
  bool contains(std::string_view token) const;
  std::span<const double> vector(std::string_view token) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::size_t dimension_ = 0;
  std::vector<std::string> tokens_;
  std::vector<double> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Cosine similarity in [-1, 1]; exactly 1.0 for identical tokens and
/// bitwise symmetric in its arguments. Throws for unknown tokens or zero
/// vectors.
double cosine_similarity(std::string_view a, std::string_view b, const EmbeddingTable& table);

enum class Direction { Out, In };

struct Triple {
  std::string head;
  std::string relation;
  std::string tail;
  double weight = 1.0;

  friend bool operator==(const Triple&, const Triple&) = default;
};

struct Neighbor {
  std::string relation;
  std::string target;
  Direction direction;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

struct LoadReport {
  std::size_t lines = 0;
  std::size_t kept = 0;
  std::size_t below_weight = 0;
  std::size_t multi_word = 0;
  std::size_t missing_embedding = 0;
  std::size_t duplicates = 0;

  std::size_t dropped() const { return below_weight + multi_word + missing_embedding + duplicates; }
};

struct LoadOptions {
  double min_weight = 0.0;
  /// An empty result is an error unless this is set.
  bool allow_empty = false;
};

/// Immutable commonsense graph. Edges are stored once and exposed from both
/// endpoints with a direction flag.
class TripleStore {
 public:
  TripleStore() = default;

  /// Builds a store from already-filtered triples; duplicates are dropped.
  TripleStore(std::vector<Triple> triples, EmbeddingTable table);

  const std::vector<Triple>& triples() const { return triples_; }
  const std::vector<std::string>& concepts() const { return concepts_; }
  const std::vector<std::string>& relations() const { return relations_; }
  const EmbeddingTable& embeddings() const { return table_; }
  const LoadReport& report() const { return report_; }

  bool contains(std::string_view token) const;
  /// Index of `relation` in relations(), or -1.
  int relation_index(std::string_view relation) const;

  /// Adjacent (relation, neighbor, direction) entries ordered by neighbor,
  /// then relation, then direction. Unknown concepts yield an empty list.
  std::vector<Neighbor> neighbors(std::string_view token) const;

  /// Content hash of triples and the embeddings of every concept.
  std::uint64_t hash() const { return hash_; }

 private:
  friend TripleStore load_store(const std::filesystem::path&, const std::filesystem::path&,
                                const LoadOptions&);

  struct Edge {
    int relation;
    int neighbor;
    Direction direction;
  };

  std::vector<Triple> triples_;
  std::vector<std::string> concepts_;
  std::vector<std::string> relations_;
  std::unordered_map<std::string, int> concept_index_;
  std::unordered_map<std::string, int> relation_index_;
  std::vector<std::vector<Edge>> adjacency_;
  EmbeddingTable table_;
  LoadReport report_;
  std::uint64_t hash_ = 0;
};

/// Reads `relation<TAB>head<TAB>tail[<TAB>weight]` assertions and the word
/// vectors; keeps triples with weight >= min_weight whose head and tail are
/// single embedded tokens.
TripleStore load_store(const std::filesystem::path& assertions_path,
                       const std::filesystem::path& embeddings_path,
                       const LoadOptions& options = {});

}  // namespace grec::kg
