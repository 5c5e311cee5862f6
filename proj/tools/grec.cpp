// grec: build graphs, train, evaluate, generate and trace from one config.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "grec/causality.hpp"
#include "grec/dialogue.hpp"
#include "grec/error.hpp"
#include "grec/graph_builder.hpp"
#include "grec/hash.hpp"
#include "grec/kg_store.hpp"
#include "grec/model.hpp"
#include "grec/pipeline.hpp"
#include "grec/run_config.hpp"
#include "grec/synthetic.hpp"
#include "grec/text.hpp"
#include "grec/trace.hpp"
#include "grec/training.hpp"

namespace fs = std::filesystem;
using namespace grec;

namespace {

void require_file(const app::RunConfig& cfg, std::string_view key) {
  const auto p = cfg.path(key);
  if (p.empty()) throw Error("config key '" + std::string(key) + "' is not set");
  if (!fs::is_regular_file(p)) throw Error(std::string(key) + " file not found: " + p.string());
}

std::string hex(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << v;
  return s.str();
}

struct Workspace {
  app::RunConfig cfg;
  kg::TripleStore store;
  cause::PosLexicon lexicon;
  std::unique_ptr<cause::CauseDetector> detector;
  std::unique_ptr<graph::GraphCache> cache;
};

// The cache directory records the store it was built from; a different
// store means stale graphs.
void check_manifest(const fs::path& dir, std::uint64_t store_hash) {
  fs::create_directories(dir);
  const auto manifest = dir / "manifest.txt";
  const std::string expected = "store " + hex(store_hash);
  if (fs::exists(manifest)) {
    std::ifstream in(manifest);
    std::string line;
    std::getline(in, line);
    if (line != expected)
      throw Error("graph cache " + dir.string() + " was built from a different store (" + line +
                  ", now " + expected + "); clear it or point cache_dir elsewhere");
    return;
  }
  std::ofstream(manifest) << expected << '\n';
}

Workspace open_workspace(const app::RunConfig& cfg) {
  require_file(cfg, "store");
  require_file(cfg, "embeddings");
  require_file(cfg, "dataset");
  const auto& det = cfg.get("detector");
  if (det != "oracle" && det != "lexical") throw Error("detector must be oracle or lexical, got '" + det + "'");
  if (det == "oracle") require_file(cfg, "annotations");
  if (!cfg.get("lexicon").empty()) require_file(cfg, "lexicon");
  cfg.model_config();
  cfg.train_config();
  cfg.graph_settings();

  Workspace ws{cfg, {}, {}, {}, {}};
  kg::LoadOptions opts;
  opts.min_weight = cfg.real("min_weight");
  ws.store = kg::load_store(cfg.path("store"), cfg.path("embeddings"), opts);
  ws.lexicon = cfg.get("lexicon").empty() ? cause::PosLexicon::builtin() : cause::PosLexicon::load(cfg.path("lexicon"));
  if (det == "oracle")
    ws.detector = std::make_unique<cause::OracleDetector>(cause::OracleDetector::load(cfg.path("annotations")));
  else
    ws.detector = std::make_unique<cause::LexicalDetector>(ws.lexicon);
  check_manifest(cfg.path("cache_dir"), ws.store.hash());
  ws.cache = std::make_unique<graph::GraphCache>(cfg.path("cache_dir"));
  return ws;
}

std::vector<data::Conversation> load_split(const Workspace& ws, data::Split split) {
  std::vector<std::string> warnings;
  auto convs = data::load_dataset(ws.cfg.path("dataset"), split, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  return convs;
}

std::vector<model::Example> prepare(Workspace& ws, const std::vector<data::Conversation>& convs,
                                    const data::Vocabulary& vocab) {
  model::CorpusSettings settings{ws.cfg.graph_settings(), ws.cfg.prepare_options()};
  auto out = model::prepare_corpus(convs, *ws.detector, ws.store, vocab, settings, ws.cache.get(), ws.lexicon);
  for (const auto& w : ws.cache->warnings()) std::cerr << "warning: " << w << '\n';
  return out;
}

fs::path vocab_path(const app::RunConfig& cfg) {
  auto p = cfg.path("checkpoint");
  p += ".vocab";
  return p;
}

model::ModelConfig model_config(const Workspace& ws, const data::Vocabulary& vocab) {
  auto mc = ws.cfg.model_config();
  model::fit_config_to_data(mc, vocab, ws.store);
  return mc;
}

std::unique_ptr<model::Model> load_model(const Workspace& ws, const data::Vocabulary& vocab) {
  const auto ckpt = ws.cfg.path("checkpoint");
  if (!fs::is_regular_file(ckpt)) throw Error("checkpoint not found: " + ckpt.string());
  auto m = std::make_unique<model::Model>(model_config(ws, vocab), ws.cfg.count("seed"));
  m->params().load(ckpt);
  return m;
}

data::Vocabulary load_vocab(const app::RunConfig& cfg) {
  const auto p = vocab_path(cfg);
  if (!fs::is_regular_file(p)) throw Error("vocabulary not found: " + p.string() + " (run train first)");
  return data::Vocabulary::load(p);
}

void echo_config(const app::RunConfig& cfg, const std::string& name) {
  const auto dir = cfg.path("output_dir");
  fs::create_directories(dir);
  std::ofstream out(dir / (name + ".config"));
  cfg.write(out);
}

// ---- subcommands ------------------------------------------------------------

int cmd_build_graphs(const app::RunConfig& cfg) {
  auto ws = open_workspace(cfg);
  echo_config(cfg, "build-graphs");
  std::size_t convs = 0, graphs = 0, empty = 0, nodes = 0, edges = 0;
  for (auto split : {data::Split::Train, data::Split::Valid, data::Split::Test}) {
    for (const auto& conv : load_split(ws, split)) {
      auto ann = ws.detector->detect(conv);
      auto gs = graph::build_all_graphs(conv, ann, ws.store, cfg.graph_settings(), ws.cache.get(), ws.lexicon);
      ++convs;
      for (const auto& g : gs) {
        ++graphs;
        if (g.no_cause_concepts) ++empty;
        nodes += g.nodes.size();
        edges += g.edges.size();
      }
    }
  }
  for (const auto& w : ws.cache->warnings()) std::cerr << "warning: " << w << '\n';
  const std::size_t lookups = ws.cache->hits() + ws.cache->misses();
  std::cout << "conversations " << convs << "\ngraphs " << graphs << "\ngraphs_without_causes " << empty
            << "\nnodes " << nodes << "\nedges " << edges << "\ncache_hits " << ws.cache->hits()
            << "\ncache_misses " << ws.cache->misses() << "\ncache_hit_rate "
            << (lookups ? 100.0 * static_cast<double>(ws.cache->hits()) / static_cast<double>(lookups) : 0.0)
            << "%\n";
  return 0;
}

int cmd_train(const app::RunConfig& cfg) {
  auto ws = open_workspace(cfg);
  const auto tc = cfg.train_config();
  auto train_convs = load_split(ws, data::Split::Train);
  if (train_convs.empty()) throw Error("no training conversations in " + cfg.get("dataset"));
  const auto vocab = data::Vocabulary::build(train_convs, cfg.count("vocab_size"));
  auto train_set = prepare(ws, train_convs, vocab);
  auto valid_set = prepare(ws, load_split(ws, data::Split::Valid), vocab);

  const auto mc = model_config(ws, vocab);
  const auto pretrained = model::pretrained_word_matrix(vocab, ws.store.embeddings(), mc.d_model, tc.seed);
  model::Model m(mc, tc.seed, pretrained ? &*pretrained : nullptr);

  const auto out_dir = cfg.path("output_dir");
  echo_config(cfg, "train");
  const auto ckpt = cfg.path("checkpoint");
  if (ckpt.has_parent_path()) fs::create_directories(ckpt.parent_path());
  vocab.save(vocab_path(cfg));
  std::ofstream metrics(out_dir / "metrics.log");
  train::TrainHooks hooks;
  hooks.metrics = &metrics;
  hooks.checkpoint = ckpt;
  auto result = train::train(m, train_set, valid_set, tc, hooks);
  if (result.diverged) throw Error("training diverged at " + result.message + "; last good parameters saved");
  std::cout << "steps " << result.steps << "\nvocab " << vocab.size() << "\nparameters "
            << m.params().scalar_count() << '\n';
  if (!result.log.empty()) std::cout << "final_loss " << result.log.back().total << '\n';
  if (result.stopped_early) std::cout << "stopped_early 1\n";
  std::cout << "checkpoint " << ckpt.string() << '\n';
  return 0;
}

std::vector<std::vector<std::string>> generate_all(model::Model& m, const std::vector<model::Example>& set,
                                                   const data::Vocabulary& vocab, std::size_t beam) {
  std::vector<std::vector<std::string>> out;
  for (const auto& ex : set)
    out.push_back(vocab.decode(train::beam_search(m, ex, beam, m.config().max_decode_len)));
  return out;
}

std::vector<std::string> target_tokens(const model::Example& ex, const data::Vocabulary& vocab) {
  std::vector<int> ids(ex.target.begin(), ex.target.end() - 1);
  return vocab.decode(ids);
}

int cmd_evaluate(const app::RunConfig& cfg) {
  auto ws = open_workspace(cfg);
  const auto vocab = load_vocab(cfg);
  auto m = load_model(ws, vocab);
  const auto split = data::parse_split(cfg.get("split"));
  auto set = prepare(ws, load_split(ws, split), vocab);
  if (set.empty()) throw Error("no conversations in split " + cfg.get("split"));
  echo_config(cfg, "evaluate");

  const auto stats = train::evaluate_teacher_forced(*m, set, cfg.count("workers"));
  auto hyps = generate_all(*m, set, vocab, cfg.count("beam"));
  std::vector<std::vector<std::string>> refs;
  for (const auto& ex : set) refs.push_back(target_tokens(ex, vocab));
  train::EvalReport report{stats.perplexity(), train::bleu(hyps, refs), stats.emotion_accuracy()};
  std::ofstream f(cfg.path("output_dir") / ("eval_" + cfg.get("split") + ".txt"));
  train::write_report(f, report);
  train::write_report(std::cout, report);
  return 0;
}

data::Conversation read_piped_conversation(std::istream& in) {
  data::Conversation c;
  c.id = "stdin";
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line))
    if (!text::trim(line).empty()) lines.emplace_back(text::trim(line));
  if (lines.size() < 2) throw Error("piped conversation needs a situation line and at least one turn");
  c.situation = data::make_utterance(data::SpeakerRole::Situation, lines[0]);
  for (std::size_t i = 1; i < lines.size(); ++i)
    c.turns.push_back(data::make_utterance(i % 2 == 1 ? data::SpeakerRole::Speaker : data::SpeakerRole::Listener, lines[i]));
  if (c.turns.back().role != data::SpeakerRole::Speaker) throw Error("the last piped turn must be the speaker's");
  return c;
}

int cmd_generate(const app::RunConfig& cfg, bool from_stdin) {
  auto ws = open_workspace(cfg);
  const auto vocab = load_vocab(cfg);
  auto m = load_model(ws, vocab);
  if (from_stdin) {
    const auto conv = read_piped_conversation(std::cin);
    cause::LexicalDetector lexical(ws.lexicon);
    model::CorpusSettings settings{cfg.graph_settings(), cfg.prepare_options()};
    auto set = model::prepare_corpus({conv}, lexical, ws.store, vocab, settings, nullptr, ws.lexicon);
    std::cout << data::detokenize(generate_all(*m, set, vocab, cfg.count("beam"))[0]) << '\n';
    return 0;
  }
  auto set = prepare(ws, load_split(ws, data::parse_split(cfg.get("split"))), vocab);
  echo_config(cfg, "generate");
  auto hyps = generate_all(*m, set, vocab, cfg.count("beam"));
  std::ofstream f(cfg.path("output_dir") / ("generate_" + cfg.get("split") + ".txt"));
  for (std::size_t i = 0; i < set.size(); ++i) {
    const std::string line = set[i].id + "\t" + text::join(hyps[i], " ");
    f << line << '\n';
    std::cout << line << '\n';
  }
  return 0;
}

int cmd_trace(const app::RunConfig& cfg) {
  auto ws = open_workspace(cfg);
  const auto vocab = load_vocab(cfg);
  auto m = load_model(ws, vocab);
  auto set = prepare(ws, load_split(ws, data::parse_split(cfg.get("split"))), vocab);
  std::vector<std::string> ids;
  for (auto id : text::split(cfg.get("ids"), ','))
    if (!text::trim(id).empty()) ids.emplace_back(text::trim(id));
  if (ids.empty()) throw Error("trace needs conversation ids (ids = a#1,b#3)");
  echo_config(cfg, "trace");
  const auto path = cfg.path("output_dir") / ("trace_" + cfg.get("ablation") + ".txt");
  std::ofstream f(path);
  for (const auto& id : ids) {
    auto it = std::find_if(set.begin(), set.end(), [&](const auto& ex) { return ex.id == id; });
    if (it == set.end()) throw Error("conversation " + id + " not found in split " + cfg.get("split"));
    const auto response = train::beam_search(*m, *it, cfg.count("beam"), m->config().max_decode_len);
    model::write_trace(f, *m, *it, response, vocab);
  }
  std::cout << "trace " << path.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Emotional-causality response generation"};
  app.require_subcommand(1);
  std::string config_path, ablation;
  bool from_stdin = false;

  std::vector<CLI::App*> model_cmds;
  for (const char* name : {"build-graphs", "train", "evaluate", "generate", "trace"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("-c,--config", config_path, "key = value config file");
    sub->add_option("--ablation", ablation, "full, no_graph, no_implicit or no_explicit")
        ->check(CLI::IsMember({"full", "no_graph", "no_implicit", "no_explicit"}));
    sub->allow_extras();
    model_cmds.push_back(sub);
  }
  model_cmds[3]->add_flag("--stdin", from_stdin, "decode one conversation from standard input");

  synth::SyntheticOptions syn;
  std::string syn_dir = "synthetic";
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic corpus");
  synth_cmd->add_option("--out", syn_dir);
  synth_cmd->add_option("--train", syn.train);
  synth_cmd->add_option("--valid", syn.valid);
  synth_cmd->add_option("--test", syn.test);
  synth_cmd->add_option("--dim", syn.dim);
  synth_cmd->add_option("--seed", syn.seed);
  synth_cmd->add_flag("--echo-causes", syn.echo_causes, "replies repeat the cause words");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (synth_cmd->parsed()) {
      synth::write_corpus(synth::make_corpus(syn), syn_dir);
      std::cout << "wrote " << syn_dir << '\n';
      return 0;
    }
    CLI::App* sub = app.get_subcommands().front();
    app::RunConfig cfg = config_path.empty() ? app::RunConfig{} : app::RunConfig::load(config_path);
    const auto extras = sub->remaining();
    for (std::size_t i = 0; i < extras.size(); ++i) {
      const auto& flag = extras[i];
      if (flag.rfind("--", 0) != 0) throw Error("unexpected argument '" + flag + "'");
      auto key = flag.substr(2);
      std::string value;
      if (auto eq = key.find('='); eq != std::string::npos) {
        value = key.substr(eq + 1);
        key = key.substr(0, eq);
      } else {
        if (i + 1 >= extras.size()) throw Error("missing value for " + flag);
        value = extras[++i];
      }
      cfg.set(key, value);
    }
    if (!ablation.empty()) cfg.set("ablation", ablation);

    const std::string name = sub->get_name();
    if (name == "build-graphs") return cmd_build_graphs(cfg);
    if (name == "train") return cmd_train(cfg);
    if (name == "evaluate") return cmd_evaluate(cfg);
    if (name == "generate") return cmd_generate(cfg, from_stdin);
    return cmd_trace(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
