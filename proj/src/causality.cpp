#include "grec/causality.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "grec/error.hpp"
#include "grec/text.hpp"

namespace grec::cause {

namespace {

// Closed-class words; everything tagged here is not a content word.
constexpr std::string_view kFunctionWords[] = {
    "a", "an", "the", "this", "that", "these", "those", "my", "your", "his", "her", "its",
    "our", "their", "i", "me", "you", "he", "him", "she", "it", "we", "us", "they", "them",
    "myself", "yourself", "himself", "herself", "itself", "ourselves", "themselves", "who",
    "whom", "whose", "which", "what", "in", "on", "at", "by", "for", "with", "about",
    "against", "between", "into", "through", "during", "before", "after", "above", "below",
    "to", "from", "up", "down", "out", "off", "over", "under", "of", "and", "but", "or", "nor",
    "because", "as", "until", "while", "if", "than", "so", "since", "when", "where", "why",
    "how", "am", "is", "are", "was", "were", "be", "been", "being", "have", "has", "had",
    "having", "do", "does", "did", "doing", "will", "would", "shall", "should", "can",
    "could", "may", "might", "must", "not", "no", "all", "any", "both", "each", "few", "more",
    "most", "other", "some", "such", "only", "own", "same", "too", "very", "just", "one",
    "two", "three", "oh", "yes", "yeah", "wow", "hey", "um", "there", "here", "then", "once",
    "again", "further", "i'm", "it's", "don't", "didn't", "can't", "that's", "i've", "i'd",
    "i'll", "you're", "wasn't", "isn't", "won't", "couldn't"};

struct TaggedWord {
  std::string_view word;
  PosTag tag;
};

// Open-class words whose most frequent tag is not noun. Words not listed
// default to noun.
constexpr TaggedWord kContentWords[] = {
    {"scary", PosTag::Adjective},    {"scared", PosTag::Adjective},
    {"afraid", PosTag::Adjective},   {"happy", PosTag::Adjective},
    {"sad", PosTag::Adjective},      {"angry", PosTag::Adjective},
    {"excited", PosTag::Adjective},  {"nervous", PosTag::Adjective},
    {"proud", PosTag::Adjective},    {"lonely", PosTag::Adjective},
    {"upset", PosTag::Adjective},    {"great", PosTag::Adjective},
    {"good", PosTag::Adjective},     {"bad", PosTag::Adjective},
    {"new", PosTag::Adjective},      {"old", PosTag::Adjective},
    {"terrible", PosTag::Adjective}, {"awesome", PosTag::Adjective},
    {"glad", PosTag::Adjective},     {"sorry", PosTag::Adjective},
    {"amazing", PosTag::Adjective},  {"first", PosTag::Adjective},
    {"last", PosTag::Adjective},     {"dark", PosTag::Adjective},
    {"grateful", PosTag::Adjective}, {"jealous", PosTag::Adjective},
    {"anxious", PosTag::Adjective},  {"furious", PosTag::Adjective},
    {"go", PosTag::Verb},            {"went", PosTag::Verb},
    {"gone", PosTag::Verb},          {"get", PosTag::Verb},
    {"got", PosTag::Verb},           {"feel", PosTag::Verb},
    {"felt", PosTag::Verb},          {"saw", PosTag::Verb},
    {"see", PosTag::Verb},           {"make", PosTag::Verb},
    {"made", PosTag::Verb},          {"lost", PosTag::Verb},
    {"lose", PosTag::Verb},          {"ran", PosTag::Verb},
    {"run", PosTag::Verb},           {"screamed", PosTag::Verb},
    {"cried", PosTag::Verb},         {"bought", PosTag::Verb},
    {"passed", PosTag::Verb},        {"died", PosTag::Verb},
    {"won", PosTag::Verb},           {"broke", PosTag::Verb},
    {"think", PosTag::Verb},         {"know", PosTag::Verb},
    {"hope", PosTag::Verb},          {"love", PosTag::Verb},
    {"really", PosTag::Adverb},      {"always", PosTag::Adverb},
    {"never", PosTag::Adverb},       {"finally", PosTag::Adverb},
    {"suddenly", PosTag::Adverb},    {"today", PosTag::Adverb},
    {"yesterday", PosTag::Adverb},   {"still", PosTag::Adverb},
    {"almost", PosTag::Adverb},      {"away", PosTag::Adverb},
};

// Standard English stopword list.
constexpr std::string_view kStopwords[] = {
    "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any",
    "are", "as", "at", "be", "because", "been", "before", "being", "below", "between", "both",
    "but", "by", "can", "could", "did", "do", "does", "doing", "down", "during", "each", "few",
    "for", "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers",
    "herself", "him", "himself", "his", "how", "i", "if", "in", "into", "is", "it", "its",
    "itself", "just", "me", "more", "most", "my", "myself", "no", "nor", "not", "now", "of",
    "off", "on", "once", "only", "or", "other", "our", "ours", "ourselves", "out", "over",
    "own", "same", "she", "should", "so", "some", "such", "than", "that", "the", "their",
    "theirs", "them", "themselves", "then", "there", "these", "they", "this", "those",
    "through", "to", "too", "under", "until", "up", "very", "was", "we", "were", "what",
    "when", "where", "which", "while", "who", "whom", "why", "will", "with", "would", "you",
    "your", "yours", "yourself", "yourselves", "really", "oh", "s", "t", "don't", "i'm",
    "it's", "that's"};

const std::vector<std::string> kCueWords = {"because", "since", "after", "when"};

std::pair<std::size_t, std::size_t> parse_pair(std::string_view s, const std::string& file,
                                               std::size_t line) {
  s = text::trim(s);
  if (s.size() < 5 || s.front() != '(' || s.back() != ')')
    throw ParseError(file, line, "expected '(utterance, clause)'");
  const auto parts = text::split(s.substr(1, s.size() - 2), ',');
  if (parts.size() != 2) throw ParseError(file, line, "expected '(utterance, clause)'");
  auto u = text::parse_int(parts[0]);
  auto c = text::parse_int(parts[1]);
  if (!u || !c || *u < 0 || *c < 0) throw ParseError(file, line, "bad clause reference");
  return {static_cast<std::size_t>(*u), static_cast<std::size_t>(*c)};
}

ClauseId resolve(const data::Conversation& conv, std::size_t utterance, std::size_t clause) {
  if (utterance >= conv.utterance_count())
    throw Error("conversation " + conv.id + " has no utterance " + std::to_string(utterance));
  const auto& utt = conv.utterance(utterance);
  if (clause >= utt.clauses.size())
    throw Error("conversation " + conv.id + " utterance " + std::to_string(utterance) +
                " has no clause " + std::to_string(clause));
  return {utterance, clause, utt.clauses[clause]};
}

}  // namespace

// ---- lexicon ----------------------------------------------------------------

const PosLexicon& PosLexicon::builtin() {
  static const PosLexicon lexicon = [] {
    PosLexicon l;
    for (auto w : kFunctionWords) l.add(std::string(w), PosTag::Other);
    for (const auto& [w, t] : kContentWords) l.add(std::string(w), t);
    return l;
  }();
  return lexicon;
}

PosLexicon PosLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open POS lexicon " + path.string());
  PosLexicon l;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto fields = text::split_ws(t);
    if (fields.size() != 2) throw ParseError(path.string(), lineno, "expected 'word<TAB>tag'");
    const auto tag = fields[1] == "NOUN" ? PosTag::Noun
                     : fields[1] == "VERB" ? PosTag::Verb
                     : fields[1] == "ADJ"  ? PosTag::Adjective
                     : fields[1] == "ADV"  ? PosTag::Adverb
                                           : PosTag::Other;
    l.add(text::to_lower(fields[0]), tag);
  }
  return l;
}

void PosLexicon::add(std::string word, PosTag tag) { tags_.emplace(std::move(word), tag); }

PosTag PosLexicon::tag(std::string_view word) const {
  auto it = tags_.find(std::string(word));
  return it == tags_.end() ? PosTag::Noun : it->second;
}

bool PosLexicon::is_content(std::string_view word) const { return tag(word) != PosTag::Other; }

bool is_stopword(std::string_view token) {
  return std::find(std::begin(kStopwords), std::end(kStopwords), token) != std::end(kStopwords);
}

std::vector<std::string> content_tokens(const data::Utterance& utterance, data::Span span,
                                        const PosLexicon& lexicon) {
  std::vector<std::string> out;
  for (std::size_t i = span.begin; i < span.end && i < utterance.tokens.size(); ++i) {
    const auto& tok = utterance.tokens[i];
    if (data::is_punctuation(tok) || is_stopword(tok) || !lexicon.is_content(tok)) continue;
    out.push_back(tok);
  }
  return out;
}

// ---- detectors --------------------------------------------------------------

const std::vector<std::string>& LexicalDetector::cue_words() { return kCueWords; }

std::vector<CauseAnnotation> LexicalDetector::detect(const data::Conversation& conv) const {
  if (conv.turns.empty() || conv.immediate().clauses.empty())
    throw Error("conversation " + conv.id + " has no clause in its immediate utterance");
  const std::size_t imm = conv.immediate_index();
  std::vector<CauseAnnotation> out;
  for (std::size_t e = 0; e < conv.immediate().clauses.size(); ++e) {
    CauseAnnotation ann;
    ann.emotion_clause = resolve(conv, imm, e);
    const auto emo_words = content_tokens(conv.immediate(), ann.emotion_clause.span, *lexicon_);
    const std::set<std::string> emo_set(emo_words.begin(), emo_words.end());
    for (std::size_t u = 0; u <= imm; ++u) {
      const auto& utt = conv.utterance(u);
      for (std::size_t c = 0; c < utt.clauses.size(); ++c) {
        const auto span = utt.clauses[c];
        bool cue = false;
        for (std::size_t i = span.begin; i < span.end; ++i)
          if (std::find(kCueWords.begin(), kCueWords.end(), utt.tokens[i]) != kCueWords.end())
            cue = true;
        const auto words = content_tokens(utt, span, *lexicon_);
        const std::set<std::string> candidate(words.begin(), words.end());
        std::size_t overlap = 0;
        for (const auto& w : candidate) overlap += emo_set.count(w);
        if (!cue && overlap == 0) continue;
        ann.cause_clauses.push_back({u, c, span});
        ann.confidence.push_back(
            cue ? 1.0
                : std::min(1.0, static_cast<double>(overlap) /
                                    static_cast<double>(std::max<std::size_t>(emo_set.size(), 1))));
      }
    }
    out.push_back(std::move(ann));
  }
  return out;
}

OracleDetector OracleDetector::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open annotation file " + path.string());
  OracleDetector det;
  std::string line;
  std::size_t lineno = 0;
  const std::string file = path.string();
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto tab = t.find('\t');
    if (tab == std::string_view::npos) throw ParseError(file, lineno, "expected conv_id<TAB>record");
    const std::string id(text::trim(t.substr(0, tab)));
    const auto record = t.substr(tab + 1);
    const auto arrow = record.find("<-");
    if (arrow == std::string_view::npos) throw ParseError(file, lineno, "missing '<-'");
    Entry entry;
    entry.emotion = parse_pair(record.substr(0, arrow), file, lineno);
    auto list = text::trim(record.substr(arrow + 2));
    if (list.size() < 2 || list.front() != '[' || list.back() != ']')
      throw ParseError(file, lineno, "expected '[...]' cause list");
    list = text::trim(list.substr(1, list.size() - 2));
    while (!list.empty()) {
      const auto close = list.find(')');
      if (close == std::string_view::npos) throw ParseError(file, lineno, "unterminated pair");
      entry.causes.push_back(parse_pair(list.substr(0, close + 1), file, lineno));
      list = text::trim(list.substr(close + 1));
      if (!list.empty()) {
        if (list.front() != ',') throw ParseError(file, lineno, "expected ',' between pairs");
        list = text::trim(list.substr(1));
      }
    }
    det.add(id, std::move(entry));
  }
  return det;
}

void OracleDetector::add(const std::string& conversation_id, Entry entry) {
  entries_[conversation_id].push_back(std::move(entry));
}

std::vector<CauseAnnotation> OracleDetector::detect(const data::Conversation& conv) const {
  auto it = entries_.find(conv.id);
  if (it == entries_.end())
    throw Error("annotation file has no entry for conversation " + conv.id);
  std::vector<CauseAnnotation> out;
  for (const auto& e : it->second) {
    CauseAnnotation ann;
    ann.emotion_clause = resolve(conv, e.emotion.first, e.emotion.second);
    if (ann.emotion_clause.utterance != conv.immediate_index())
      throw Error("conversation " + conv.id + ": emotion clause outside the immediate utterance");
    for (const auto& [u, c] : e.causes) {
      if (u > ann.emotion_clause.utterance)
        throw Error("conversation " + conv.id + ": cause clause after the emotion clause");
      ann.cause_clauses.push_back(resolve(conv, u, c));
      ann.confidence.push_back(1.0);
    }
    out.push_back(std::move(ann));
  }
  return out;
}

void write_annotations(std::ostream& out, const std::string& id,
                       const std::vector<CauseAnnotation>& annotations) {
  for (const auto& a : annotations) {
    out << id << "\t(" << a.emotion_clause.utterance << ", " << a.emotion_clause.clause
        << ") <- [";
    for (std::size_t i = 0; i < a.cause_clauses.size(); ++i) {
      if (i) out << ", ";
      out << '(' << a.cause_clauses[i].utterance << ", " << a.cause_clauses[i].clause << ')';
    }
    out << "]\n";
  }
}

// ---- concepts and buckets ---------------------------------------------------

ConceptSets extract_concepts(const CauseAnnotation& annotation, const data::Conversation& conv,
                             const kg::TripleStore& store, const PosLexicon& lexicon) {
  auto collect = [&](const ClauseId& id, std::set<std::string>& into) {
    for (auto& w : content_tokens(conv.utterance(id.utterance), id.span, lexicon))
      if (store.contains(w)) into.insert(std::move(w));
  };
  std::set<std::string> emo, cas;
  collect(annotation.emotion_clause, emo);
  for (const auto& c : annotation.cause_clauses) collect(c, cas);
  return {{emo.begin(), emo.end()}, {cas.begin(), cas.end()}};
}

std::map<std::pair<std::size_t, std::size_t>, std::size_t> cause_counts(
    const std::vector<CauseAnnotation>& annotations) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> counts;
  for (const auto& a : annotations) {
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const auto& c : a.cause_clauses)
      if (seen.emplace(c.utterance, c.clause).second) ++counts[{c.utterance, c.clause}];
  }
  return counts;
}

std::vector<int> causal_buckets(const data::FlatContext& context,
                                const std::vector<CauseAnnotation>& annotations,
                                std::size_t num_buckets) {
  if (num_buckets < 2) throw Error("num_buckets must be at least 2");
  const auto counts = cause_counts(annotations);
  std::vector<int> out(context.tokens.size(), 0);
  for (std::size_t i = 1; i < context.tokens.size(); ++i) {
    const auto& ref = context.clause_of[i];
    auto it = counts.find({ref.utterance, ref.clause});
    const std::size_t n = it == counts.end() ? 0 : it->second;
    out[i] = static_cast<int>(std::min(n, num_buckets - 1));
  }
  return out;
}

}  // namespace grec::cause
