#include "grec/run_config.hpp"

#include <fstream>
#include <ostream>

#include "grec/error.hpp"
#include "grec/text.hpp"

namespace grec::app {

RunConfig::RunConfig() {
  values_ = {
      // files
      {"store", ""},
      {"embeddings", ""},
      {"dataset", ""},
      {"annotations", ""},
      {"lexicon", ""},
      {"cache_dir", "cache"},
      {"checkpoint", "model.ckpt"},
      {"output_dir", "out"},
      {"detector", "oracle"},
      {"split", "test"},
      {"ids", ""},
      {"min_weight", "0"},
      // graphs
      {"top_k", "10"},
      {"hops", "2"},
      // data
      {"vocab_size", "20000"},
      {"max_context", "256"},
      {"max_decode_len", "40"},
      {"num_buckets", "4"},
      // model
      {"d_model", "300"},
      {"heads", "8"},
      {"head_dim", "40"},
      {"filters", "50"},
      {"encoder_layers", "6"},
      {"decoder_layers", "6"},
      {"d_graph", "64"},
      {"gcn_layers", "2"},
      {"gamma", "0.8"},
      {"ablation", "full"},
      // training
      {"batch_size", "32"},
      {"lr", "0.0001"},
      {"lr_schedule", "constant"},
      {"lr_decay", "0.1"},
      {"lr_interval", "500"},
      {"lr_floor", "0.00001"},
      {"lambda", "1"},
      {"max_steps", "1000"},
      {"epochs", "0"},
      {"seed", "1"},
      {"beam", "5"},
      {"valid_every", "200"},
      {"patience", "5"},
      {"workers", "1"},
  };
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  RunConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) throw ParseError(path.string(), lineno, "expected key = value");
    const auto key = text::trim(t.substr(0, eq));
    if (!cfg.has_key(key)) throw ParseError(path.string(), lineno, "unknown config key '" + std::string(key) + "'");
    cfg.set(key, text::trim(t.substr(eq + 1)));
  }
  return cfg;
}

bool RunConfig::has_key(std::string_view key) const { return values_.find(key) != values_.end(); }

void RunConfig::set(std::string_view key, std::string_view value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw Error("unknown config key '" + std::string(key) + "'");
  it->second = std::string(value);
}

const std::string& RunConfig::get(std::string_view key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw Error("unknown config key '" + std::string(key) + "'");
  return it->second;
}

std::size_t RunConfig::count(std::string_view key) const {
  auto v = text::parse_int(get(key));
  if (!v || *v < 0) throw Error("config key '" + std::string(key) + "' needs a non-negative integer, got '" + get(key) + "'");
  return static_cast<std::size_t>(*v);
}

double RunConfig::real(std::string_view key) const {
  auto v = text::parse_double(get(key));
  if (!v) throw Error("config key '" + std::string(key) + "' needs a number, got '" + get(key) + "'");
  return *v;
}

std::filesystem::path RunConfig::path(std::string_view key) const { return get(key); }

void RunConfig::write(std::ostream& out) const {
  for (const auto& [k, v] : values_) out << k << " = " << v << '\n';
}

model::ModelConfig RunConfig::model_config() const {
  model::ModelConfig c;
  c.d_model = count("d_model");
  c.heads = count("heads");
  c.head_dim = count("head_dim");
  c.filters = count("filters");
  c.encoder_layers = count("encoder_layers");
  c.decoder_layers = count("decoder_layers");
  c.d_graph = count("d_graph");
  c.gcn_layers = count("gcn_layers");
  c.num_buckets = count("num_buckets");
  c.gamma = real("gamma");
  c.max_decode_len = count("max_decode_len");
  c.ablation = model::parse_ablation(get("ablation"));
  return c;
}

train::TrainConfig RunConfig::train_config() const {
  train::TrainConfig c;
  c.batch_size = count("batch_size");
  c.lr = real("lr");
  const auto& schedule = get("lr_schedule");
  if (schedule == "constant") c.schedule = train::Schedule::Constant;
  else if (schedule == "step") c.schedule = train::Schedule::StepDecay;
  else throw Error("lr_schedule must be constant or step, got '" + schedule + "'");
  c.lr_decay = real("lr_decay");
  c.lr_interval = count("lr_interval");
  c.lr_floor = real("lr_floor");
  c.lambda = real("lambda");
  c.max_steps = count("max_steps");
  c.epochs = count("epochs");
  c.seed = count("seed");
  c.beam = count("beam");
  c.valid_every = count("valid_every");
  c.patience = count("patience");
  c.workers = count("workers");
  c.validate();
  return c;
}

graph::GraphSettings RunConfig::graph_settings() const {
  graph::GraphSettings s;
  s.top_k = static_cast<int>(count("top_k"));
  s.hops = static_cast<int>(count("hops"));
  if (s.top_k < 1 || s.hops < 1) throw Error("top_k and hops must be at least 1");
  return s;
}

model::PrepareOptions RunConfig::prepare_options() const {
  model::PrepareOptions p;
  p.max_context = count("max_context");
  p.num_buckets = count("num_buckets");
  p.max_decode_len = count("max_decode_len");
  return p;
}

}  // namespace grec::app
