#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>

#include "grec/graph_builder.hpp"
#include "grec/model_config.hpp"
#include "grec/pipeline.hpp"
#include "grec/training.hpp"

namespace grec::app {

/// Flat `key = value` configuration. Every key has a default; unknown keys
/// are rejected.
class RunConfig {
 public:
  RunConfig();

  /// Defaults overlaid with the file's entries. `#` starts a comment line.
  static RunConfig load(const std::filesystem::path& path);

  void set(std::string_view key, std::string_view value);
  bool has_key(std::string_view key) const;
  const std::string& get(std::string_view key) const;

  std::size_t count(std::string_view key) const;
  double real(std::string_view key) const;
  std::filesystem::path path(std::string_view key) const;

  /// Every key in sorted order, one `key = value` line each.
  void write(std::ostream& out) const;

  model::ModelConfig model_config() const;
  train::TrainConfig train_config() const;
  graph::GraphSettings graph_settings() const;
  model::PrepareOptions prepare_options() const;

  const std::map<std::string, std::string, std::less<>>& values() const { return values_; }

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

}  // namespace grec::app
