#include "grec/graph_builder.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

#include "grec/error.hpp"
#include "grec/hash.hpp"
#include "grec/text.hpp"

namespace grec::graph {

std::string_view role_name(Role role) {
  switch (role) {
    case Role::Cause: return "cause";
    case Role::Emotion: return "emotion";
    case Role::Intermediate: return "intermediate";
  }
  return "intermediate";
}

int CausalityGraph::find(std::string_view token) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].token == token) return static_cast<int>(i);
  return -1;
}

int CausalityGraph::max_depth() const {
  int d = 0;
  for (const auto& n : nodes) d = std::max(d, n.depth);
  return d;
}

double emotion_similarity(const std::string& token, const std::vector<std::string>& emotion,
                          const kg::EmbeddingTable& table) {
  double best = -2.0;
  for (const auto& e : emotion) best = std::max(best, kg::cosine_similarity(token, e, table));
  return best;
}

HopResult expand_hop(const kg::TripleStore& store, const std::set<std::string>& frontier,
                     const std::set<std::string>& visited,
                     const std::vector<std::string>& emotion_concepts, int top_k,
                     const kg::EmbeddingTable& table) {
  if (top_k < 1) throw Error("K must be at least 1");
  HopResult result;

  std::vector<SelectedTriple> candidates;
  std::map<std::string, double> tail_score;
  for (const auto& f : frontier) {
    for (auto& n : store.neighbors(f)) {
      if (visited.count(n.target)) continue;
      if (!tail_score.count(n.target))
        tail_score[n.target] = emotion_similarity(n.target, emotion_concepts, table);
      candidates.push_back({f, std::move(n.relation), std::move(n.target), n.direction});
    }
  }
  if (candidates.empty()) return result;

  std::vector<std::pair<std::string, double>> ranked(tail_score.begin(), tail_score.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > static_cast<std::size_t>(top_k)) ranked.resize(static_cast<std::size_t>(top_k));

  std::map<std::string, std::size_t> rank;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    rank[ranked[i].first] = i;
    result.selected.push_back(ranked[i].first);
    if (std::find(emotion_concepts.begin(), emotion_concepts.end(), ranked[i].first) ==
        emotion_concepts.end())
      result.new_frontier.push_back(ranked[i].first);
  }
  for (auto& c : candidates)
    if (rank.count(c.tail)) result.triples.push_back(std::move(c));
  std::stable_sort(result.triples.begin(), result.triples.end(),
                   [&](const SelectedTriple& a, const SelectedTriple& b) {
                     const auto ra = rank.at(a.tail), rb = rank.at(b.tail);
                     if (ra != rb) return ra < rb;
                     return std::tie(a.relation, a.head, a.direction) <
                            std::tie(b.relation, b.head, b.direction);
                   });
  return result;
}

CausalityGraph build_graph(const kg::TripleStore& store, const cause::ConceptSets& concepts,
                           int top_k, int hops, const kg::EmbeddingTable& table) {
  if (top_k < 1) throw Error("K must be at least 1");
  if (hops < 1) throw Error("H must be at least 1");
  CausalityGraph g;
  if (concepts.cause.empty()) {
    g.no_cause_concepts = true;
    return g;
  }
  const std::set<std::string> emotion(concepts.emotion.begin(), concepts.emotion.end());
  std::set<std::string> visited, frontier;
  std::map<std::string, int> index;
  for (const auto& c : std::set<std::string>(concepts.cause.begin(), concepts.cause.end())) {
    index[c] = static_cast<int>(g.nodes.size());
    g.nodes.push_back({c, Role::Cause, 0});
    visited.insert(c);
    if (!emotion.count(c)) frontier.insert(c);
  }
  for (int h = 1; h <= hops && !frontier.empty(); ++h) {
    auto hop = expand_hop(store, frontier, visited, concepts.emotion, top_k, table);
    for (const auto& tok : hop.selected) {
      index[tok] = static_cast<int>(g.nodes.size());
      g.nodes.push_back({tok, emotion.count(tok) ? Role::Emotion : Role::Intermediate, h});
      visited.insert(tok);
    }
    for (const auto& t : hop.triples) g.edges.push_back({index.at(t.head), t.relation, index.at(t.tail), h});
    frontier = std::set<std::string>(hop.new_frontier.begin(), hop.new_frontier.end());
  }
  return g;
}

CausalityGraph build_graph(const kg::TripleStore& store, const cause::ConceptSets& concepts,
                           int top_k, int hops) {
  return build_graph(store, concepts, top_k, hops, store.embeddings());
}

// ---- serialization ----------------------------------------------------------

namespace {

std::string hex(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << v;
  return s.str();
}

std::optional<Role> parse_role(std::string_view s) {
  if (s == "cause") return Role::Cause;
  if (s == "emotion") return Role::Emotion;
  if (s == "intermediate") return Role::Intermediate;
  return std::nullopt;
}

std::string key_line(const CacheKey& key) {
  return "key\t" + key.conversation_id + "\tK\t" + std::to_string(key.top_k) + "\tH\t" +
         std::to_string(key.hops) + "\tstore\t" + hex(key.store_hash) + "\tconcepts\t" +
         hex(key.concepts_hash);
}

}  // namespace

void write_graphs(std::ostream& out, const CacheKey& key, const std::vector<CausalityGraph>& graphs) {
  out << kGraphCacheHeader << '\n' << key_line(key) << '\n';
  out << "graphs\t" << graphs.size() << '\n';
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const auto& g = graphs[i];
    out << "graph\t" << i << "\tclause\t" << g.clause_utterance << '\t' << g.clause_index
        << "\tnodes\t" << g.nodes.size() << "\tedges\t" << g.edges.size() << "\tno_cause\t"
        << (g.no_cause_concepts ? 1 : 0) << '\n';
    for (const auto& n : g.nodes)
      out << "node\t" << n.token << '\t' << role_name(n.role) << '\t' << n.depth << '\n';
    for (const auto& e : g.edges)
      out << "edge\t" << e.src << '\t' << e.relation << '\t' << e.dst << '\t' << e.hop << '\n';
  }
  out << "end\n";
}

std::optional<std::vector<CausalityGraph>> read_graphs(std::istream& in, const CacheKey& key) {
  std::string line;
  if (!std::getline(in, line) || line != kGraphCacheHeader) return std::nullopt;
  if (!std::getline(in, line) || line != key_line(key)) return std::nullopt;
  auto fields = [&]() -> std::optional<std::vector<std::string_view>> {
    if (!std::getline(in, line)) return std::nullopt;
    return text::split(line, '\t');
  };
  auto count = [](std::string_view s) -> std::optional<std::size_t> {
    auto v = text::parse_int(s);
    if (!v || *v < 0) return std::nullopt;
    return static_cast<std::size_t>(*v);
  };

  auto head = fields();
  if (!head || head->size() != 2 || (*head)[0] != "graphs") return std::nullopt;
  auto n_graphs = count((*head)[1]);
  if (!n_graphs) return std::nullopt;

  std::vector<CausalityGraph> graphs;
  for (std::size_t gi = 0; gi < *n_graphs; ++gi) {
    auto f = fields();
    if (!f || f->size() != 11 || (*f)[0] != "graph") return std::nullopt;
    CausalityGraph g;
    auto cu = count((*f)[3]), ci = count((*f)[4]), nn = count((*f)[6]), ne = count((*f)[8]),
         nc = count((*f)[10]);
    if (!cu || !ci || !nn || !ne || !nc) return std::nullopt;
    g.clause_utterance = *cu;
    g.clause_index = *ci;
    g.no_cause_concepts = *nc != 0;
    for (std::size_t k = 0; k < *nn; ++k) {
      auto nf = fields();
      if (!nf || nf->size() != 4 || (*nf)[0] != "node") return std::nullopt;
      auto role = parse_role((*nf)[2]);
      auto depth = count((*nf)[3]);
      if (!role || !depth) return std::nullopt;
      g.nodes.push_back({std::string((*nf)[1]), *role, static_cast<int>(*depth)});
    }
    for (std::size_t k = 0; k < *ne; ++k) {
      auto ef = fields();
      if (!ef || ef->size() != 5 || (*ef)[0] != "edge") return std::nullopt;
      auto src = count((*ef)[1]), dst = count((*ef)[3]), hop = count((*ef)[4]);
      if (!src || !dst || !hop || *src >= g.nodes.size() || *dst >= g.nodes.size())
        return std::nullopt;
      g.edges.push_back({static_cast<int>(*src), std::string((*ef)[2]), static_cast<int>(*dst),
                         static_cast<int>(*hop)});
    }
    graphs.push_back(std::move(g));
  }
  if (!std::getline(in, line) || line != "end") return std::nullopt;
  return graphs;
}

std::uint64_t hash_concepts(const std::vector<cause::ConceptSets>& sets) {
  Fnv1a h;
  for (const auto& s : sets) {
    for (const auto& e : s.emotion) {
      h.update(e);
      h.update(std::string_view("\x01"));
    }
    h.update(std::string_view("|"));
    for (const auto& c : s.cause) {
      h.update(c);
      h.update(std::string_view("\x01"));
    }
    h.update(std::string_view("\n"));
  }
  return h.digest();
}

// ---- cache ------------------------------------------------------------------

GraphCache::GraphCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path GraphCache::path_for(const CacheKey& key) const {
  std::string safe;
  for (char c : key.conversation_id)
    safe += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.') ? c : '_';
  return dir_ / (safe + "__" + hex(fnv1a64(key.conversation_id)) + "__K" +
                 std::to_string(key.top_k) + "_H" + std::to_string(key.hops) + "_" +
                 hex(key.store_hash) + ".graphs");
}

std::optional<std::vector<CausalityGraph>> GraphCache::load(const CacheKey& key) {
  const auto path = path_for(key);
  std::ifstream in(path);
  if (!in) {
    ++misses_;
    return std::nullopt;
  }
  auto graphs = read_graphs(in, key);
  if (!graphs) {
    warnings_.push_back("graph cache entry " + path.string() + " is corrupt or stale; rebuilding");
    ++misses_;
    return std::nullopt;
  }
  ++hits_;
  return graphs;
}

void GraphCache::save(const CacheKey& key, const std::vector<CausalityGraph>& graphs) {
  const auto path = path_for(key);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error("cannot write graph cache " + tmp.string());
    write_graphs(out, key, graphs);
    if (!out) throw Error("failed writing graph cache " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<cause::ConceptSets> clause_concepts(const data::Conversation& conversation,
                                                const std::vector<cause::CauseAnnotation>& annotations,
                                                const kg::TripleStore& store,
                                                const cause::PosLexicon& lexicon) {
  const std::size_t imm = conversation.immediate_index();
  const std::size_t n_clauses = conversation.immediate().clauses.size();
  std::vector<cause::ConceptSets> sets(n_clauses);
  std::vector<bool> annotated(n_clauses, false);
  for (const auto& a : annotations) {
    if (a.emotion_clause.utterance != imm || a.emotion_clause.clause >= n_clauses) continue;
    auto s = cause::extract_concepts(a, conversation, store, lexicon);
    auto& dst = sets[a.emotion_clause.clause];
    if (annotated[a.emotion_clause.clause]) {
      // Several annotations for one clause: union their concepts.
      std::set<std::string> emo(dst.emotion.begin(), dst.emotion.end());
      std::set<std::string> cas(dst.cause.begin(), dst.cause.end());
      emo.insert(s.emotion.begin(), s.emotion.end());
      cas.insert(s.cause.begin(), s.cause.end());
      dst = {{emo.begin(), emo.end()}, {cas.begin(), cas.end()}};
    } else {
      dst = std::move(s);
      annotated[a.emotion_clause.clause] = true;
    }
  }
  return sets;
}

std::vector<CausalityGraph> build_all_graphs(const data::Conversation& conversation,
                                             const std::vector<cause::CauseAnnotation>& annotations,
                                             const kg::TripleStore& store,
                                             const GraphSettings& settings, GraphCache* cache,
                                             const cause::PosLexicon& lexicon) {
  const std::size_t imm = conversation.immediate_index();
  const auto sets = clause_concepts(conversation, annotations, store, lexicon);
  const std::size_t n_clauses = sets.size();
  const CacheKey key{conversation.id, settings.top_k, settings.hops, store.hash(),
                     hash_concepts(sets)};
  if (cache)
    if (auto hit = cache->load(key)) return *hit;

  std::vector<CausalityGraph> graphs;
  graphs.reserve(n_clauses);
  for (std::size_t c = 0; c < n_clauses; ++c) {
    auto g = build_graph(store, sets[c], settings.top_k, settings.hops);
    g.clause_utterance = imm;
    g.clause_index = c;
    graphs.push_back(std::move(g));
  }
  if (cache) cache->save(key, graphs);
  return graphs;
}

}  // namespace grec::graph
