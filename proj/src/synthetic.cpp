#include "grec/synthetic.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <tuple>
#include <vector>

#include "grec/error.hpp"

namespace grec::synth {

namespace {

const std::vector<std::string> kNouns = {
    "dog",    "cat",     "car",    "house",  "job",     "exam",   "phone",   "garden",
    "bike",   "friend",  "sister", "brother", "boss",   "teacher", "puppy",  "wallet",
    "laptop", "concert", "trip",   "party",  "game",    "movie",  "storm",   "interview",
    "cousin", "kitten",  "roof",   "boat",   "wedding", "neighbor", "grandma", "team"};
const std::vector<std::string> kEvents = {"died",    "broke",  "failed", "won",   "lost",   "crashed",
                                          "arrived", "left",   "passed", "started", "ended", "flooded"};
const std::vector<std::string> kTimes = {"yesterday", "today", "tonight", "recently", "suddenly", "finally"};
const std::vector<std::string> kEmotions = {"afraid",  "angry",     "anxious",      "ashamed",
                                            "excited", "grateful",  "disappointed", "embarrassed",
                                            "joyful",  "lonely",    "proud",        "sad",
                                            "surprised", "terrified", "furious",    "guilty"};
const std::vector<std::string> kReplies = {"terrible", "awful",  "great", "wonderful", "scary",
                                           "tough",    "hard",   "amazing", "lovely",  "rough"};
const std::vector<std::string> kClosings = {"hope it gets better", "i am here for you",
                                            "tell me more", "good luck with everything",
                                            "take care of yourself", "what happened next"};
const std::vector<std::string> kIntermediate = {"loss",    "grief",   "danger", "success", "reward",
                                                "fear",    "pain",    "joy",    "trouble", "celebration",
                                                "accident", "victory", "failure", "tears",  "smile"};
const std::vector<std::string> kRelations = {"Causes", "RelatedTo", "HasProperty", "CapableOf"};
const std::vector<std::string> kFunctionWords = {"my", "i", "feel", "sorry", "your", "that",
                                                 "sounds", "oh", ".", ","};

template <class T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

std::vector<std::string> text_words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

}  // namespace

SyntheticCorpus make_corpus(const SyntheticOptions& options) {
  if (options.dim == 0) throw Error("synthetic embedding dimension must be positive");
  std::mt19937_64 rng(options.seed);
  SyntheticCorpus out;

  std::ostringstream csv, ann;
  csv << "conv_id,utterance_idx,context,prompt,speaker_idx,utterance,split\n";
  const std::size_t total = options.train + options.valid + options.test;
  std::vector<std::string> nouns = kNouns;
  std::shuffle(nouns.begin(), nouns.end(), rng);
  std::set<std::tuple<std::string, std::string, std::string, std::string>> used;
  for (std::size_t i = 0; i < total; ++i) {
    const char* split = i < options.train ? "train" : i < options.train + options.valid ? "valid" : "test";
    std::string noun, event, time, emotion;
    do {
      noun = nouns[i % nouns.size()];
      event = pick(kEvents, rng);
      time = pick(kTimes, rng);
      emotion = pick(kEmotions, rng);
    } while (!used.insert({noun, event, time, emotion}).second);
    const std::string reply = pick(kReplies, rng);
    const std::string closing = pick(kClosings, rng);
    const std::string id = "synth_" + std::to_string(i);
    const std::string prompt = "my " + noun + " " + event + " " + time + " .";
    const std::string speaker = "my " + noun + " " + event + " _comma_ i feel " + emotion + " .";
    const std::string listener = options.echo_causes
                                     ? "sorry your " + noun + " " + event + " . that sounds " + reply + " ."
                                     : "oh . that sounds " + reply + " . " + closing + " .";
    csv << id << ",1," << emotion << ',' << prompt << ",1," << speaker << ',' << split << '\n';
    csv << id << ",2," << emotion << ',' << prompt << ",2," << listener << ',' << split << '\n';
    ann << id << "#2\t(1, 1) <- [(0, 0), (1, 0)]\n";
    ann << id << "#2\t(1, 0) <- [(0, 0)]\n";
  }
  out.dataset_csv = csv.str();
  out.annotations_tsv = ann.str();

  // Commonsense edges: noun/event -> intermediate -> emotion, plus a few
  // direct links.
  std::ostringstream kg;
  kg << "# synthetic assertions\n";
  auto edge = [&](const std::string& h, const std::string& t) {
    kg << pick(kRelations, rng) << '\t' << h << '\t' << t << "\t1.0\n";
  };
  for (const auto& n : kNouns) {
    edge(n, pick(kIntermediate, rng));
    edge(n, pick(kIntermediate, rng));
  }
  for (const auto& e : kEvents) {
    edge(e, pick(kIntermediate, rng));
    edge(e, pick(kEmotions, rng));
  }
  for (const auto& m : kIntermediate) {
    edge(m, pick(kEmotions, rng));
    edge(m, pick(kEmotions, rng));
    edge(m, pick(kIntermediate, rng));
  }
  for (const auto& t : kTimes) edge(t, pick(kIntermediate, rng));
  out.assertions_tsv = kg.str();

  std::ostringstream emb;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::set<std::string> words;
  for (const auto& c : kClosings)
    for (const auto& w : text_words(c)) words.insert(w);
  for (const auto* list : {&kNouns, &kEvents, &kTimes, &kEmotions, &kReplies, &kIntermediate, &kFunctionWords})
    words.insert(list->begin(), list->end());
  emb.precision(17);
  for (const auto& w : words) {
    emb << w;
    for (std::size_t d = 0; d < options.dim; ++d) emb << ' ' << normal(rng);
    emb << '\n';
  }
  out.embeddings_txt = emb.str();
  return out;
}

void write_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const char* name, const std::string& body) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw Error("cannot write " + (dir / name).string());
    f << body;
  };
  write("dataset.csv", corpus.dataset_csv);
  write("assertions.tsv", corpus.assertions_tsv);
  write("embeddings.txt", corpus.embeddings_txt);
  write("annotations.tsv", corpus.annotations_tsv);
}

}  // namespace grec::synth
