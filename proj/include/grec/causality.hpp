#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "grec/dialogue.hpp"
#include "grec/kg_store.hpp"

namespace grec::cause {

/// A clause addressed by utterance index (0 = situation) and clause index.
struct ClauseId {
  std::size_t utterance = 0;
  std::size_t clause = 0;
  data::Span span;

  friend bool operator==(const ClauseId& a, const ClauseId& b) {
    return a.utterance == b.utterance && a.clause == b.clause;
  }
  friend auto operator<=>(const ClauseId& a, const ClauseId& b) {
    if (auto c = a.utterance <=> b.utterance; c != 0) return c;
    return a.clause <=> b.clause;
  }
};

struct CauseAnnotation {
  ClauseId emotion_clause;
  std::vector<ClauseId> cause_clauses;
  std::vector<double> confidence;
};

/// Emotion concepts (V_emo) and cause concepts (V_cas), sorted and unique.
struct ConceptSets {
  std::vector<std::string> emotion;
  std::vector<std::string> cause;

  friend bool operator==(const ConceptSets&, const ConceptSets&) = default;
};

enum class PosTag { Noun, Verb, Adjective, Adverb, Other };

/// Word -> most frequent part-of-speech tag. Unknown words are nouns.
class PosLexicon {
 public:
  /// The bundled table.
  static const PosLexicon& builtin();
  /// Reads `word<TAB>tag` lines (tags: NOUN VERB ADJ ADV, anything else is
  /// a function word). Later lines for the same word are ignored.
  static PosLexicon load(const std::filesystem::path& path);

  void add(std::string word, PosTag tag);
  PosTag tag(std::string_view word) const;
  bool is_content(std::string_view word) const;

 private:
  std::unordered_map<std::string, PosTag> tags_;
};

bool is_stopword(std::string_view token);

/// Content words of a clause: content POS, not a stopword, not punctuation.
std::vector<std::string> content_tokens(const data::Utterance& utterance, data::Span span,
                                        const PosLexicon& lexicon = PosLexicon::builtin());

/// Pluggable emotion-cause detector.
class CauseDetector {
 public:
  virtual ~CauseDetector() = default;
  /// One annotation per emotion clause (every clause of the immediate
  /// utterance), cause clauses in document order.
  virtual std::vector<CauseAnnotation> detect(const data::Conversation& conversation) const = 0;
};

/// A clause is a cause when it shares a content token with the emotion
/// clause or contains a causal cue word.
class LexicalDetector : public CauseDetector {
 public:
  explicit LexicalDetector(const PosLexicon& lexicon = PosLexicon::builtin())
      : lexicon_(&lexicon) {}
  std::vector<CauseAnnotation> detect(const data::Conversation& conversation) const override;

  static const std::vector<std::string>& cue_words();

 private:
  const PosLexicon* lexicon_;
};

/// Replays precomputed annotations from a sidecar file, one line per
/// emotion clause:
///   conv_id<TAB>(emo_utt, emo_clause) <- [(cause_utt, cause_clause), ...]
class OracleDetector : public CauseDetector {
 public:
  static OracleDetector load(const std::filesystem::path& path);

  struct Entry {
    std::pair<std::size_t, std::size_t> emotion;
    std::vector<std::pair<std::size_t, std::size_t>> causes;
  };
  void add(const std::string& conversation_id, Entry entry);

  std::vector<CauseAnnotation> detect(const data::Conversation& conversation) const override;

 private:
  std::map<std::string, std::vector<Entry>> entries_;
};

/// Writes annotations in the sidecar format.
void write_annotations(std::ostream& out, const std::string& conversation_id,
                       const std::vector<CauseAnnotation>& annotations);

ConceptSets extract_concepts(const CauseAnnotation& annotation,
                             const data::Conversation& conversation, const kg::TripleStore& store,
                             const PosLexicon& lexicon = PosLexicon::builtin());

/// Per-position bucket ids for the flattened context: a clause's bucket is
/// min(times it is named as a cause, num_buckets - 1); CLS gets 0.
std::vector<int> causal_buckets(const data::FlatContext& context,
                                const std::vector<CauseAnnotation>& annotations,
                                std::size_t num_buckets);

/// Number of annotations naming each clause as a cause.
std::map<std::pair<std::size_t, std::size_t>, std::size_t> cause_counts(
    const std::vector<CauseAnnotation>& annotations);

}  // namespace grec::cause
