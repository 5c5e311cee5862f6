#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "grec/autodiff.hpp"
#include "grec/pipeline.hpp"
#include "grec/synthetic.hpp"

namespace grec::testing {

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("grec_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& body) {
  std::ofstream(p, std::ios::binary) << body;
}

inline nn::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                                double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  nn::Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = u(rng);
  return m;
}

/// d_model 16, d_g 8, one encoder and one decoder layer, two heads.
inline model::ModelConfig tiny_config() {
  model::ModelConfig c;
  c.d_model = 16;
  c.heads = 2;
  c.head_dim = 8;
  c.filters = 16;
  c.encoder_layers = 1;
  c.decoder_layers = 1;
  c.d_graph = 8;
  c.gcn_layers = 2;
  c.max_decode_len = 20;
  return c;
}

/// A synthetic corpus on disk, loaded and prepared.
struct Corpus {
  TempDir dir;
  kg::TripleStore store;
  std::vector<data::Conversation> train, valid, test;
  data::Vocabulary vocab;
  std::vector<model::Example> train_set, valid_set, test_set;
  model::ModelConfig config;
};

inline std::unique_ptr<Corpus> make_corpus(const synth::SyntheticOptions& options,
                                           std::size_t vocab_max = 20000,
                                           graph::GraphSettings graphs = {}) {
  auto c = std::make_unique<Corpus>();
  synth::write_corpus(synth::make_corpus(options), c->dir.path());
  c->store = kg::load_store(c->dir / "assertions.tsv", c->dir / "embeddings.txt");
  const auto csv = c->dir / "dataset.csv";
  c->train = data::load_dataset(csv, data::Split::Train);
  c->valid = data::load_dataset(csv, data::Split::Valid);
  c->test = data::load_dataset(csv, data::Split::Test);
  c->vocab = data::Vocabulary::build(c->train, vocab_max);
  auto det = cause::OracleDetector::load(c->dir / "annotations.tsv");
  model::CorpusSettings settings;
  settings.graphs = graphs;
  settings.prepare.max_decode_len = 20;
  c->train_set = model::prepare_corpus(c->train, det, c->store, c->vocab, settings);
  c->valid_set = model::prepare_corpus(c->valid, det, c->store, c->vocab, settings);
  c->test_set = model::prepare_corpus(c->test, det, c->store, c->vocab, settings);
  c->config = tiny_config();
  model::fit_config_to_data(c->config, c->vocab, c->store);
  return c;
}

}  // namespace grec::testing
