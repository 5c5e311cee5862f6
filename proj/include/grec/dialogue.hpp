#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace grec::data {

inline constexpr std::size_t kNumEmotions = 32;

/// EmpatheticDialogues emotion labels; a label's index is its position here.
inline constexpr std::array<std::string_view, kNumEmotions> kEmotionLabels = {
    "afraid",      "angry",     "annoyed",   "anticipating", "anxious",    "apprehensive",
    "ashamed",     "caring",    "confident", "content",      "devastated", "disappointed",
    "disgusted",   "embarrassed", "excited", "faithful",     "furious",    "grateful",
    "guilty",      "hopeful",   "impressed", "jealous",      "joyful",     "lonely",
    "nostalgic",   "prepared",  "proud",     "sad",          "sentimental", "surprised",
    "terrified",   "trusting"};

/// Index of `label` in kEmotionLabels, or -1.
int emotion_index(std::string_view label);

enum class SpeakerRole { Situation, Speaker, Listener };

/// Half-open token range [begin, end).
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  friend bool operator==(const Span&, const Span&) = default;
};

struct Utterance {
  SpeakerRole role = SpeakerRole::Speaker;
  std::vector<std::string> tokens;
  std::vector<Span> clauses;
};

/// One training example: everything said before a listener reply, and the
/// reply itself as the target.
struct Conversation {
  std::string id;
  int emotion = 0;
  Utterance situation;
  std::vector<Utterance> turns;
  std::vector<std::string> target;

  /// Utterance 0 is the situation; utterance i > 0 is turns[i - 1].
  std::size_t utterance_count() const { return turns.size() + 1; }
  const Utterance& utterance(std::size_t index) const {
    return index == 0 ? situation : turns.at(index - 1);
  }
  /// The immediate (last speaker) utterance.
  std::size_t immediate_index() const { return turns.size(); }
  const Utterance& immediate() const { return turns.back(); }
};

enum class Split { Train, Valid, Test };

Split parse_split(std::string_view name);
std::string_view split_name(Split split);

/// Lowercases, splits on whitespace, and detaches trailing punctuation
/// (. , ! ? ; :) as separate tokens. `_comma_` is read as a comma.
std::vector<std::string> tokenize(std::string_view text);
std::string detokenize(const std::vector<std::string>& tokens);

bool is_punctuation(std::string_view token);

/// Splits after . ! ? ; , and merges spans with fewer than two
/// non-punctuation tokens into the previous span (or the next one when
/// there is no previous span).
std::vector<Span> segment_clauses(const std::vector<std::string>& tokens);

/// Builds an utterance from raw text, tokenized and clause-segmented.
Utterance make_utterance(SpeakerRole role, std::string_view text);

/// Reads the dataset CSV (`conv_id,utterance_idx,context,prompt,utterance`
/// plus an optional `split` column; other columns are ignored) and returns
/// one Conversation per listener turn of the requested split.
/// Empty dialogues are skipped and described in `warnings`.
std::vector<Conversation> load_dataset(const std::filesystem::path& path, Split split,
                                       std::vector<std::string>* warnings = nullptr);

/// Fixed-index token table. Specials occupy ids 0..4.
class Vocabulary {
 public:
  static constexpr int kCls = 0;
  static constexpr int kSos = 1;
  static constexpr int kEos = 2;
  static constexpr int kPad = 3;
  static constexpr int kUnk = 4;
  static constexpr std::size_t kNumSpecials = 5;

  Vocabulary();

  /// Specials plus the most frequent tokens up to `max_size` entries in
  /// total; ties are broken lexicographically.
  static Vocabulary build(const std::vector<Conversation>& conversations, std::size_t max_size);
  static Vocabulary from_tokens(const std::vector<std::string>& non_special_tokens);

  std::size_t size() const { return tokens_.size(); }
  int id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<int> encode(const std::vector<std::string>& tokens) const;
  std::vector<std::string> decode(const std::vector<int>& ids) const;

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  void append(const std::string& token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

/// Dialogue-state tags for the encoder input.
enum DialogueState : int { kStateSituation = 0, kStateSpeaker = 1, kStateListener = 2, kStateCls = 3 };
inline constexpr std::size_t kNumDialogueStates = 4;

/// Reference from a flattened context position back to its clause.
struct ClauseRef {
  std::size_t utterance = 0;
  std::size_t clause = 0;
};

/// The encoder input: CLS followed by the flattened situation and turns,
/// truncated from the oldest end to at most `max_length` positions.
struct FlatContext {
  std::vector<std::string> tokens;
  std::vector<int> states;
  /// clause_of[0] is unused (CLS).
  std::vector<ClauseRef> clause_of;
};

FlatContext flatten_context(const Conversation& conversation, std::size_t max_length);

}  // namespace grec::data
