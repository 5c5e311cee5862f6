#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <sstream>

#include "grec/dialogue.hpp"
#include "grec/error.hpp"
#include "support.hpp"

using namespace grec;
using namespace grec::data;
using grec::testing::TempDir;
using grec::testing::write_file;

namespace {

const char* kHeader = "conv_id,utterance_idx,context,prompt,utterance,split\n";

std::string dialogue_rows(const std::string& id, int turns, const std::string& split = "train",
                          const std::string& emotion = "sad") {
  std::ostringstream out;
  for (int i = 1; i <= turns; ++i)
    out << id << ',' << i << ',' << emotion << ",my dog died_comma_ sadly," << "turn " << i
        << " of " << id << " here .," << split << '\n';
  return out.str();
}

std::vector<Span> spans(std::string_view text) { return segment_clauses(tokenize(text)); }

}  // namespace

TEST(Tokenize, LowercasesAndDetachesPunctuation) {
  EXPECT_EQ(tokenize("I saw a Shadow, then I screamed!"),
            (std::vector<std::string>{"i", "saw", "a", "shadow", ",", "then", "i", "screamed", "!"}));
  EXPECT_EQ(tokenize("wow_comma_ really?!"),
            (std::vector<std::string>{"wow", ",", "really", "?", "!"}));
}

TEST(LoadDataset, FourTurnsGiveTwoConversations) {
  TempDir dir;
  write_file(dir / "d.csv", std::string(kHeader) + dialogue_rows("hit:1_conv:2", 4));
  auto convs = load_dataset(dir / "d.csv", Split::Train);
  ASSERT_EQ(convs.size(), 2u);
  EXPECT_EQ(convs[0].id, "hit:1_conv:2#2");
  EXPECT_EQ(convs[0].turns.size(), 1u);
  EXPECT_EQ(convs[0].target, tokenize("turn 2 of hit:1_conv:2 here ."));
  EXPECT_EQ(convs[1].turns.size(), 3u);
  EXPECT_EQ(convs[1].target, tokenize("turn 4 of hit:1_conv:2 here ."));
  EXPECT_EQ(convs[1].immediate().role, SpeakerRole::Speaker);
  EXPECT_EQ(convs[1].emotion, emotion_index("sad"));
  EXPECT_EQ(convs[0].situation.tokens, tokenize("my dog died , sadly"));
}

TEST(LoadDataset, NoListenerTurnGivesNothing) {
  TempDir dir;
  write_file(dir / "d.csv", std::string(kHeader) + dialogue_rows("c1", 1));
  EXPECT_TRUE(load_dataset(dir / "d.csv", Split::Train).empty());
}

TEST(LoadDataset, TenDialogueFixtureCountMatchesIndependentScan) {
  TempDir dir;
  const int turns[] = {2, 4, 6, 5, 3, 8, 2, 4, 6, 8};
  std::string body = kHeader;
  for (int i = 0; i < 10; ++i) body += dialogue_rows("conv" + std::to_string(i), turns[i]);
  write_file(dir / "d.csv", body);

  // independent count: listener rows are the even utterance_idx values
  std::istringstream scan(body);
  std::string line;
  std::getline(scan, line);
  std::size_t listener_rows = 0;
  while (std::getline(scan, line)) {
    const auto a = line.find(','), b = line.find(',', a + 1);
    if (std::stoi(line.substr(a + 1, b - a - 1)) % 2 == 0) ++listener_rows;
  }
  EXPECT_EQ(listener_rows, 23u);
  EXPECT_EQ(load_dataset(dir / "d.csv", Split::Train).size(), listener_rows);
}

TEST(LoadDataset, SplitColumnFiltersAndIsOptional) {
  TempDir dir;
  write_file(dir / "d.csv", std::string(kHeader) + dialogue_rows("a", 2, "train") +
                                dialogue_rows("b", 4, "valid") + dialogue_rows("c", 2, "test"));
  EXPECT_EQ(load_dataset(dir / "d.csv", Split::Train).size(), 1u);
  EXPECT_EQ(load_dataset(dir / "d.csv", Split::Valid).size(), 2u);
  EXPECT_EQ(load_dataset(dir / "d.csv", Split::Test).size(), 1u);

  write_file(dir / "n.csv",
             "conv_id,utterance_idx,context,prompt,utterance,speaker_idx\n"
             "x,1,afraid,p,hello there .,1\nx,2,afraid,p,hi you .,2\n");
  EXPECT_EQ(load_dataset(dir / "n.csv", Split::Test).size(), 1u);
}

TEST(LoadDataset, MissingColumnAndEmptyDialogue) {
  TempDir dir;
  write_file(dir / "d.csv", "conv_id,utterance_idx,context,utterance\nx,1,sad,hi\n");
  EXPECT_THROW(load_dataset(dir / "d.csv", Split::Train), Error);

  write_file(dir / "e.csv", std::string(kHeader) + "x,1,sad,p, ,train\nx,2,sad,p, ,train\n" +
                                dialogue_rows("y", 2));
  std::vector<std::string> warnings;
  auto convs = load_dataset(dir / "e.csv", Split::Train, &warnings);
  EXPECT_EQ(convs.size(), 1u);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("x"), std::string::npos);
}

TEST(Segment, SingleClause) {
  EXPECT_EQ(spans("i was scared ."), (std::vector<Span>{{0, 4}}));
}

TEST(Segment, CommaRule) {
  EXPECT_EQ(spans("i saw a shadow , i screamed !"), (std::vector<Span>{{0, 5}, {5, 8}}));
}

TEST(Segment, ShortLeadingFragmentMergesForward) {
  EXPECT_EQ(spans("oh , i saw a shadow ."), (std::vector<Span>{{0, 7}}));
}

TEST(Segment, ShortTrailingFragmentMergesBack) {
  EXPECT_EQ(spans("i saw a shadow , wow !"), (std::vector<Span>{{0, 7}}));
  EXPECT_EQ(spans("no delimiter here"), (std::vector<Span>{{0, 3}}));
}

TEST(Vocabulary, EmptyCorpusHasSpecialsOnly) {
  auto v = Vocabulary::build({}, 100);
  EXPECT_EQ(v.size(), 5u);
  EXPECT_EQ(v.token(Vocabulary::kCls), "<cls>");
  EXPECT_EQ(v.token(Vocabulary::kUnk), "<unk>");
  EXPECT_EQ(v.id("anything"), Vocabulary::kUnk);
}

TEST(Vocabulary, FrequencyCutoff) {
  Conversation c;
  c.situation.tokens = {"a", "b", "a"};
  c.target = {"a"};
  auto v = Vocabulary::build({c}, 6);
  EXPECT_EQ(v.size(), 6u);
  EXPECT_EQ(v.token(5), "a");
  EXPECT_FALSE(v.contains("b"));
  EXPECT_THROW(Vocabulary::build({c}, 5), Error);
}

TEST(Vocabulary, FiftyTokenFixtureKeepsTopByCount) {
  std::vector<Conversation> convs(3);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 50; ++i) {
    const std::string tok = "tok" + std::to_string(i);
    const int count = 1 + static_cast<int>(rng() % 9);
    for (int k = 0; k < count; ++k) convs[static_cast<std::size_t>(k % 3)].target.push_back(tok);
  }
  std::shuffle(convs[0].target.begin(), convs[0].target.end(), rng);

  // independent frequency count with lexicographic tie-break
  std::map<std::string, int> counts;
  for (const auto& c : convs)
    for (const auto& t : c.target) ++counts[t];
  std::vector<std::pair<std::string, int>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });

  auto v = Vocabulary::build(convs, 30);
  ASSERT_EQ(v.size(), 30u);
  for (int i = 0; i < 25; ++i) EXPECT_EQ(v.token(5 + i), ranked[static_cast<std::size_t>(i)].first);
  EXPECT_EQ(Vocabulary::build(convs, 30), v);
}

TEST(Vocabulary, SaveLoadRoundTrip) {
  TempDir dir;
  auto v = Vocabulary::from_tokens({"x", "y", "z"});
  v.save(dir / "v.txt");
  EXPECT_EQ(Vocabulary::load(dir / "v.txt"), v);
  EXPECT_EQ(v.decode(v.encode({"y", "q"})), (std::vector<std::string>{"y", "<unk>"}));
}

TEST(Corpus, RoundTripAndClausePartition) {
  auto corpus = grec::testing::make_corpus({.train = 30, .valid = 5, .test = 5});
  std::size_t checked = 0;
  for (const auto* split : {&corpus->train, &corpus->valid, &corpus->test}) {
    for (const auto& c : *split) {
      for (std::size_t u = 0; u < c.utterance_count(); ++u) {
        const auto& utt = c.utterance(u);
        EXPECT_EQ(tokenize(detokenize(utt.tokens)), utt.tokens);
        std::size_t next = 0;
        for (const auto& s : utt.clauses) {
          EXPECT_EQ(s.begin, next);
          EXPECT_GT(s.size(), 0u);
          next = s.end;
        }
        EXPECT_EQ(next, utt.tokens.size());
        ++checked;
      }
      EXPECT_FALSE(c.target.empty());
      EXPECT_EQ(c.immediate().role, SpeakerRole::Speaker);
    }
  }
  EXPECT_GT(checked, 0u);
}

TEST(Flatten, ClsFirstAndOldestTruncated) {
  Conversation c;
  c.situation = make_utterance(SpeakerRole::Situation, "a b c .");
  c.turns.push_back(make_utterance(SpeakerRole::Speaker, "d e ."));
  auto full = flatten_context(c, 100);
  EXPECT_EQ(full.tokens, (std::vector<std::string>{"<cls>", "a", "b", "c", ".", "d", "e", "."}));
  EXPECT_EQ(full.states, (std::vector<int>{kStateCls, 0, 0, 0, 0, 1, 1, 1}));
  auto cut = flatten_context(c, 4);
  EXPECT_EQ(cut.tokens, (std::vector<std::string>{"<cls>", "d", "e", "."}));
  EXPECT_EQ(cut.clause_of[1].utterance, 1u);
}
