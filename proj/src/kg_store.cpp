#include "grec/kg_store.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <tuple>

#include "grec/error.hpp"
#include "grec/hash.hpp"
#include "grec/text.hpp"

namespace grec::kg {

// ---- EmbeddingTable ---------------------------------------------------------

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open embeddings file " + path.string());
  EmbeddingTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto fields = text::split_ws(line);
    if (fields.empty()) continue;
    if (fields.size() < 2)
      throw ParseError(path.string(), lineno, "expected a token followed by vector components");
    std::vector<double> v;
    v.reserve(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      auto x = text::parse_double(fields[i]);
      if (!x) throw ParseError(path.string(), lineno, "bad number '" + std::string(fields[i]) + "'");
      v.push_back(*x);
    }
    if (table.dimension_ == 0) table.dimension_ = v.size();
    if (v.size() != table.dimension_)
      throw ParseError(path.string(), lineno,
                       "embedding dimension " + std::to_string(v.size()) + " differs from " +
                           std::to_string(table.dimension_));
    const std::string token(fields[0]);
    if (table.contains(token)) continue;
    table.add(token, std::move(v));
  }
  if (table.size() == 0) throw Error("embeddings file " + path.string() + " is empty");
  return table;
}

void EmbeddingTable::add(const std::string& token, std::vector<double> vector) {
  if (dimension_ == 0) dimension_ = vector.size();
  if (vector.size() != dimension_)
    throw Error("embedding for '" + token + "' has dimension " + std::to_string(vector.size()) +
                ", table has " + std::to_string(dimension_));
  if (index_.count(token)) throw Error("duplicate embedding for '" + token + "'");
  index_.emplace(token, tokens_.size());
  tokens_.push_back(token);
  values_.insert(values_.end(), vector.begin(), vector.end());
}

bool EmbeddingTable::contains(std::string_view token) const {
  return index_.count(std::string(token)) != 0;
}

std::span<const double> EmbeddingTable::vector(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) throw Error("no embedding for token '" + std::string(token) + "'");
  return {values_.data() + it->second * dimension_, dimension_};
}

double cosine_similarity(std::string_view a, std::string_view b, const EmbeddingTable& table) {
  const auto va = table.vector(a);
  const auto vb = table.vector(b);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) {
    dot += va[i] * vb[i];
    na += va[i] * va[i];
    nb += vb[i] * vb[i];
  }
  if (na == 0.0) throw Error("zero embedding vector for '" + std::string(a) + "'");
  if (nb == 0.0) throw Error("zero embedding vector for '" + std::string(b) + "'");
  if (a == b) return 1.0;
  const double c = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(c, -1.0, 1.0);
}

// ---- TripleStore ------------------------------------------------------------

TripleStore::TripleStore(std::vector<Triple> triples, EmbeddingTable table)
    : table_(std::move(table)) {
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  std::set<std::string> concept_set, relation_set;
  for (auto& t : triples) {
    if (!seen.emplace(t.head, t.relation, t.tail).second) {
      ++report_.duplicates;
      continue;
    }
    concept_set.insert(t.head);
    concept_set.insert(t.tail);
    relation_set.insert(t.relation);
    triples_.push_back(std::move(t));
  }
  report_.kept = triples_.size();

  concepts_.assign(concept_set.begin(), concept_set.end());
  relations_.assign(relation_set.begin(), relation_set.end());
  for (std::size_t i = 0; i < concepts_.size(); ++i) concept_index_[concepts_[i]] = static_cast<int>(i);
  for (std::size_t i = 0; i < relations_.size(); ++i)
    relation_index_[relations_[i]] = static_cast<int>(i);

  adjacency_.resize(concepts_.size());
  for (const auto& t : triples_) {
    const int h = concept_index_.at(t.head);
    const int r = relation_index_.at(t.relation);
    const int tl = concept_index_.at(t.tail);
    adjacency_[static_cast<std::size_t>(h)].push_back({r, tl, Direction::Out});
    adjacency_[static_cast<std::size_t>(tl)].push_back({r, h, Direction::In});
  }
  // Concept and relation ids are assigned in lexicographic order, so id order
  // is string order.
  for (auto& edges : adjacency_)
    std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
      return std::tie(x.neighbor, x.relation, x.direction) <
             std::tie(y.neighbor, y.relation, y.direction);
    });

  Fnv1a h;
  h.update(std::uint64_t{triples_.size()});
  for (const auto& t : triples_) {
    h.update(t.head);
    h.update(std::string_view("\t"));
    h.update(t.relation);
    h.update(std::string_view("\t"));
    h.update(t.tail);
    h.update(std::string_view("\n"));
  }
  for (const auto& c : concepts_)
    if (table_.contains(c))
      for (double v : table_.vector(c)) h.update(v);
  hash_ = h.digest();
}

bool TripleStore::contains(std::string_view token) const {
  return concept_index_.count(std::string(token)) != 0;
}

int TripleStore::relation_index(std::string_view relation) const {
  auto it = relation_index_.find(std::string(relation));
  return it == relation_index_.end() ? -1 : it->second;
}

std::vector<Neighbor> TripleStore::neighbors(std::string_view token) const {
  std::vector<Neighbor> out;
  auto it = concept_index_.find(std::string(token));
  if (it == concept_index_.end()) return out;
  const auto& edges = adjacency_[static_cast<std::size_t>(it->second)];
  out.reserve(edges.size());
  for (const auto& e : edges)
    out.push_back({relations_[static_cast<std::size_t>(e.relation)],
                   concepts_[static_cast<std::size_t>(e.neighbor)], e.direction});
  return out;
}

namespace {

bool single_token(std::string_view s) {
  return !s.empty() && s.find_first_of(" _/") == std::string_view::npos;
}

}  // namespace

TripleStore load_store(const std::filesystem::path& assertions_path,
                       const std::filesystem::path& embeddings_path, const LoadOptions& options) {
  EmbeddingTable table = EmbeddingTable::load(embeddings_path);

  std::ifstream in(assertions_path);
  if (!in) throw Error("cannot open assertions file " + assertions_path.string());

  LoadReport report;
  std::vector<Triple> kept;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto trimmed = text::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    ++report.lines;
    const auto fields = text::split(trimmed, '\t');
    if (fields.size() < 3 || fields.size() > 4)
      throw ParseError(assertions_path.string(), lineno,
                       "expected relation<TAB>head<TAB>tail[<TAB>weight]");
    Triple t;
    t.relation = std::string(text::trim(fields[0]));
    t.head = text::to_lower(text::trim(fields[1]));
    t.tail = text::to_lower(text::trim(fields[2]));
    if (t.relation.empty() || t.head.empty() || t.tail.empty())
      throw ParseError(assertions_path.string(), lineno, "empty relation, head or tail");
    if (fields.size() == 4) {
      auto w = text::parse_double(fields[3]);
      if (!w || *w < 0.0)
        throw ParseError(assertions_path.string(), lineno,
                         "bad weight '" + std::string(fields[3]) + "'");
      t.weight = *w;
    }
    if (t.weight < options.min_weight) {
      ++report.below_weight;
      continue;
    }
    if (!single_token(t.head) || !single_token(t.tail)) {
      ++report.multi_word;
      continue;
    }
    if (!table.contains(t.head) || !table.contains(t.tail)) {
      ++report.missing_embedding;
      continue;
    }
    kept.push_back(std::move(t));
  }

  TripleStore store(std::move(kept), std::move(table));
  report.duplicates = store.report_.duplicates;
  report.kept = store.triples_.size();
  store.report_ = report;
  if (store.triples_.empty() && !options.allow_empty)
    throw Error("assertions file " + assertions_path.string() + " yielded an empty store (" +
                std::to_string(report.dropped()) + " triples dropped)");
  return store;
}

}  // namespace grec::kg
