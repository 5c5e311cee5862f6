#include "grec/dialogue.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>

#include "grec/error.hpp"
#include "grec/text.hpp"

namespace grec::data {

namespace {

constexpr std::string_view kClauseDelimiters[] = {".", "!", "?", ";", ","};
constexpr std::string_view kDetachable = ".,!?;:";

bool is_clause_delimiter(std::string_view tok) {
  return std::find(std::begin(kClauseDelimiters), std::end(kClauseDelimiters), tok) !=
         std::end(kClauseDelimiters);
}

std::size_t content_count(const std::vector<std::string>& tokens, Span s) {
  std::size_t n = 0;
  for (std::size_t i = s.begin; i < s.end; ++i)
    if (!is_punctuation(tokens[i])) ++n;
  return n;
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

}  // namespace

int emotion_index(std::string_view label) {
  for (std::size_t i = 0; i < kEmotionLabels.size(); ++i)
    if (kEmotionLabels[i] == label) return static_cast<int>(i);
  return -1;
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "valid" || name == "validation" || name == "dev") return Split::Valid;
  if (name == "test") return Split::Test;
  throw Error("unknown split '" + std::string(name) + "'");
}

std::string_view split_name(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Valid: return "valid";
    case Split::Test: return "test";
  }
  return "train";
}

bool is_punctuation(std::string_view token) {
  return !token.empty() && std::all_of(token.begin(), token.end(), [](char c) {
    return kDetachable.find(c) != std::string_view::npos;
  });
}

std::vector<std::string> tokenize(std::string_view raw) {
  const std::string lowered = text::to_lower(replace_all(std::string(raw), "_comma_", ","));
  std::vector<std::string> out;
  for (auto word : text::split_ws(lowered)) {
    std::size_t end = word.size();
    while (end > 0 && kDetachable.find(word[end - 1]) != std::string_view::npos) --end;
    if (end > 0) out.emplace_back(word.substr(0, end));
    for (std::size_t i = end; i < word.size(); ++i) out.emplace_back(1, word[i]);
  }
  return out;
}

std::string detokenize(const std::vector<std::string>& tokens) { return text::join(tokens, " "); }

std::vector<Span> segment_clauses(const std::vector<std::string>& tokens) {
  std::vector<Span> raw;
  std::size_t start = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (is_clause_delimiter(tokens[i])) {
      raw.push_back({start, i + 1});
      start = i + 1;
    }
  }
  if (start < tokens.size()) raw.push_back({start, tokens.size()});

  std::vector<Span> out;
  std::optional<Span> pending;
  for (Span s : raw) {
    if (pending) {
      s.begin = pending->begin;
      pending.reset();
    }
    if (content_count(tokens, s) < 2) {
      if (!out.empty())
        out.back().end = s.end;
      else
        pending = s;
    } else {
      out.push_back(s);
    }
  }
  if (pending) out.push_back(*pending);
  return out;
}

Utterance make_utterance(SpeakerRole role, std::string_view raw) {
  Utterance u;
  u.role = role;
  u.tokens = tokenize(raw);
  u.clauses = segment_clauses(u.tokens);
  return u;
}

std::vector<Conversation> load_dataset(const std::filesystem::path& path, Split split,
                                       std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error("dataset " + path.string() + " is empty");

  const auto header = text::split(text::trim(line), ',');
  auto find_column = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (text::trim(header[i]) == name) return i;
    return std::nullopt;
  };
  auto column = [&](std::string_view name) {
    if (auto c = find_column(name)) return *c;
    throw Error("dataset " + path.string() + " is missing column '" + std::string(name) + "'");
  };
  const std::size_t c_conv = column("conv_id");
  const std::size_t c_idx = column("utterance_idx");
  const std::size_t c_ctx = column("context");
  const std::size_t c_prompt = column("prompt");
  const std::size_t c_utt = column("utterance");
  // Without a split column every row belongs to the requested split.
  const auto c_split = find_column("split");
  const std::size_t needed =
      std::max({c_conv, c_idx, c_ctx, c_prompt, c_utt, c_split.value_or(0)}) + 1;

  struct Dialogue {
    std::string emotion;
    std::string prompt;
    std::size_t first_line = 0;
    std::map<long long, std::string> turns;
  };
  std::vector<std::string> order;
  std::map<std::string, Dialogue> dialogues;

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(line, ',');
    if (fields.size() < needed)
      throw ParseError(path.string(), lineno,
                       "expected at least " + std::to_string(needed) + " columns");
    if (c_split && text::trim(fields[*c_split]) != split_name(split)) continue;
    const std::string conv(text::trim(fields[c_conv]));
    auto idx = text::parse_int(fields[c_idx]);
    if (!idx) throw ParseError(path.string(), lineno, "bad utterance_idx");
    auto [it, inserted] = dialogues.try_emplace(conv);
    if (inserted) {
      order.push_back(conv);
      it->second.emotion = text::to_lower(text::trim(fields[c_ctx]));
      it->second.prompt = std::string(fields[c_prompt]);
      it->second.first_line = lineno;
      if (emotion_index(it->second.emotion) < 0)
        throw ParseError(path.string(), lineno, "unknown emotion '" + it->second.emotion + "'");
    }
    it->second.turns[*idx] = std::string(fields[c_utt]);
  }

  std::vector<Conversation> out;
  for (const auto& conv_id : order) {
    const auto& d = dialogues.at(conv_id);
    std::vector<std::pair<long long, Utterance>> turns;
    bool any_text = false;
    std::size_t position = 0;
    for (const auto& [idx, raw] : d.turns) {
      const auto role = position % 2 == 0 ? SpeakerRole::Speaker : SpeakerRole::Listener;
      turns.emplace_back(idx, make_utterance(role, raw));
      any_text = any_text || !turns.back().second.tokens.empty();
      ++position;
    }
    if (!any_text) {
      if (warnings) warnings->push_back("skipping empty dialogue " + conv_id);
      continue;
    }
    const Utterance situation = make_utterance(SpeakerRole::Situation, d.prompt);
    for (std::size_t t = 1; t < turns.size(); t += 2) {
      if (turns[t].second.tokens.empty() || turns[t - 1].second.tokens.empty()) {
        if (warnings)
          warnings->push_back("skipping empty turn in " + conv_id + " at utterance " +
                              std::to_string(turns[t].first));
        continue;
      }
      Conversation c;
      c.id = conv_id + "#" + std::to_string(turns[t].first);
      c.emotion = emotion_index(d.emotion);
      c.situation = situation;
      for (std::size_t k = 0; k < t; ++k) c.turns.push_back(turns[k].second);
      c.target = turns[t].second.tokens;
      out.push_back(std::move(c));
    }
  }
  return out;
}

// ---- Vocabulary -------------------------------------------------------------

Vocabulary::Vocabulary() {
  for (const char* s : {"<cls>", "<sos>", "<eos>", "<pad>", "<unk>"}) append(s);
}

void Vocabulary::append(const std::string& token) {
  if (index_.count(token)) throw Error("duplicate vocabulary token '" + token + "'");
  index_.emplace(token, static_cast<int>(tokens_.size()));
  tokens_.push_back(token);
}

Vocabulary Vocabulary::build(const std::vector<Conversation>& conversations, std::size_t max_size) {
  if (max_size < kNumSpecials + 1) throw Error("vocabulary max_size must be at least 6");
  std::map<std::string, std::size_t> counts;
  auto count = [&](const std::vector<std::string>& tokens) {
    for (const auto& t : tokens) ++counts[t];
  };
  for (const auto& c : conversations) {
    count(c.situation.tokens);
    for (const auto& t : c.turns) count(t.tokens);
    count(c.target);
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary v;
  for (const auto& [token, n] : ranked) {
    if (v.size() >= max_size) break;
    if (v.contains(token)) continue;
    v.append(token);
  }
  return v;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& non_special_tokens) {
  Vocabulary v;
  for (const auto& t : non_special_tokens) v.append(t);
  return v;
}

int Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.count(std::string(token)) != 0;
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::vector<std::string> Vocabulary::decode(const std::vector<int>& ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int i : ids) out.push_back(token(i));
  return out;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write vocabulary " + path.string());
  for (std::size_t i = kNumSpecials; i < tokens_.size(); ++i) out << tokens_[i] << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open vocabulary " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) tokens.push_back(line);
  return from_tokens(tokens);
}

// ---- flattening -------------------------------------------------------------

FlatContext flatten_context(const Conversation& conversation, std::size_t max_length) {
  if (max_length < 1) throw Error("max context length must be at least 1");
  FlatContext body;
  for (std::size_t u = 0; u < conversation.utterance_count(); ++u) {
    const auto& utt = conversation.utterance(u);
    const int state = utt.role == SpeakerRole::Situation ? kStateSituation
                      : utt.role == SpeakerRole::Speaker ? kStateSpeaker
                                                         : kStateListener;
    for (std::size_t c = 0; c < utt.clauses.size(); ++c) {
      for (std::size_t i = utt.clauses[c].begin; i < utt.clauses[c].end; ++i) {
        body.tokens.push_back(utt.tokens[i]);
        body.states.push_back(state);
        body.clause_of.push_back({u, c});
      }
    }
  }
  const std::size_t keep = std::min(body.tokens.size(), max_length - 1);
  const std::size_t drop = body.tokens.size() - keep;

  FlatContext out;
  out.tokens.push_back("<cls>");
  out.states.push_back(kStateCls);
  out.clause_of.push_back({});
  out.tokens.insert(out.tokens.end(), body.tokens.begin() + static_cast<std::ptrdiff_t>(drop),
                    body.tokens.end());
  out.states.insert(out.states.end(), body.states.begin() + static_cast<std::ptrdiff_t>(drop),
                    body.states.end());
  out.clause_of.insert(out.clause_of.end(),
                       body.clause_of.begin() + static_cast<std::ptrdiff_t>(drop),
                       body.clause_of.end());
  return out;
}

}  // namespace grec::data
