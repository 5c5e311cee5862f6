#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "grec/causality.hpp"
#include "grec/kg_store.hpp"

namespace grec::graph {

enum class Role { Cause, Emotion, Intermediate };

std::string_view role_name(Role role);

struct Node {
  std::string token;
  Role role = Role::Intermediate;
  int depth = 0;

  friend bool operator==(const Node&, const Node&) = default;
};

/// Edge from a node expanded at hop - 1 to a node added at `hop`.
struct Edge {
  int src = 0;
  std::string relation;
  int dst = 0;
  int hop = 1;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Emotional-causality graph for one emotion clause.
struct CausalityGraph {
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  /// (utterance, clause) of the emotion clause this graph belongs to.
  std::size_t clause_utterance = 0;
  std::size_t clause_index = 0;
  /// Set when the cause-concept set was empty.
  bool no_cause_concepts = false;

  /// Index of the node for `token`, or -1.
  int find(std::string_view token) const;
  int max_depth() const;

  friend bool operator==(const CausalityGraph&, const CausalityGraph&) = default;
};

/// A store edge walked from a frontier concept to a neighbor.
struct SelectedTriple {
  std::string head;
  std::string relation;
  std::string tail;
  kg::Direction direction = kg::Direction::Out;

  friend bool operator==(const SelectedTriple&, const SelectedTriple&) = default;
};

struct HopResult {
  std::vector<SelectedTriple> triples;
  /// Selected tails in rank order.
  std::vector<std::string> selected;
  /// Selected tails that are not emotion concepts, in rank order.
  std::vector<std::string> new_frontier;
};

/// Similarity of a candidate to the emotion concepts: max cosine, or -2
/// (below every cosine) when there are none.
double emotion_similarity(const std::string& token, const std::vector<std::string>& emotion,
                          const kg::EmbeddingTable& table);

/// One synchronized hop: collects every store edge from a frontier concept
/// to an unvisited neighbor, ranks distinct neighbors by similarity to the
/// emotion concepts (ties: token), keeps the top K, and returns every
/// candidate edge that reaches a kept neighbor.
HopResult expand_hop(const kg::TripleStore& store, const std::set<std::string>& frontier,
                     const std::set<std::string>& visited,
                     const std::vector<std::string>& emotion_concepts, int top_k,
                     const kg::EmbeddingTable& table);

/// Runs `hops` expansions from the cause concepts. Emotion concepts are
/// never expanded; intermediate nodes are kept even if no emotion concept
/// is reached.
CausalityGraph build_graph(const kg::TripleStore& store, const cause::ConceptSets& concepts,
                           int top_k, int hops, const kg::EmbeddingTable& table);
CausalityGraph build_graph(const kg::TripleStore& store, const cause::ConceptSets& concepts,
                           int top_k, int hops);

// ---- serialization and cache ------------------------------------------------

inline constexpr std::string_view kGraphCacheHeader = "grec-graph-cache v1";

struct CacheKey {
  std::string conversation_id;
  int top_k = 0;
  int hops = 0;
  std::uint64_t store_hash = 0;
  /// Hash of the concept sets the graphs were built from.
  std::uint64_t concepts_hash = 0;
};

void write_graphs(std::ostream& out, const CacheKey& key, const std::vector<CausalityGraph>& graphs);
/// Parses a cache record; nullopt when it is malformed or keyed differently.
std::optional<std::vector<CausalityGraph>> read_graphs(std::istream& in, const CacheKey& key);

std::uint64_t hash_concepts(const std::vector<cause::ConceptSets>& sets);

/// On-disk graph cache, one file per (conversation, K, H, store hash).
class GraphCache {
 public:
  explicit GraphCache(std::filesystem::path dir);

  std::optional<std::vector<CausalityGraph>> load(const CacheKey& key);
  /// Atomic: writes a temporary file and renames it into place.
  void save(const CacheKey& key, const std::vector<CausalityGraph>& graphs);

  std::filesystem::path path_for(const CacheKey& key) const;

  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  std::filesystem::path dir_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
  std::vector<std::string> warnings_;
};

struct GraphSettings {
  int top_k = 10;
  int hops = 2;
};

/// Concept sets per clause of the immediate utterance. Clauses without an
/// annotation get empty sets; several annotations for a clause are merged.
std::vector<cause::ConceptSets> clause_concepts(const data::Conversation& conversation,
                                                const std::vector<cause::CauseAnnotation>& annotations,
                                                const kg::TripleStore& store,
                                                const cause::PosLexicon& lexicon =
                                                    cause::PosLexicon::builtin());

/// One graph per clause of the immediate utterance, in clause order.
/// Clauses without an annotation get a graph with no cause concepts.
std::vector<CausalityGraph> build_all_graphs(const data::Conversation& conversation,
                                             const std::vector<cause::CauseAnnotation>& annotations,
                                             const kg::TripleStore& store,
                                             const GraphSettings& settings,
                                             GraphCache* cache = nullptr,
                                             const cause::PosLexicon& lexicon =
                                                 cause::PosLexicon::builtin());

}  // namespace grec::graph
