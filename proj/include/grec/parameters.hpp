#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "grec/tensor.hpp"

namespace grec::nn {

enum class InitScheme { UniformScaled, Zeros, Pretrained, Constant };

/// A named trainable (or frozen) weight.
struct Parameter {
  std::string name;
  Matrix value;
  bool trainable = true;
};

/// Per-parameter gradient accumulators, indexed like the owning store.
using GradBuffer = std::vector<Matrix>;

/// Ordered registry of every weight in a model. Names are unique, shapes are
/// fixed at creation, and iteration order is insertion order.
class ParameterStore {
 public:
  /// Creates a parameter initialized by `scheme`. UniformScaled draws from
  /// U(-a, a), a = sqrt(6 / (rows + cols)), seeded by (seed, name).
  Parameter& add(const std::string& name, std::size_t rows, std::size_t cols,
                 InitScheme scheme, std::uint64_t seed, bool trainable = true,
                 double constant = 0.0);

  /// Creates an embedding parameter whose rows are copied from `rows`.
  /// Fails when the shape is not an embedding (rows.cols() must match cols).
  Parameter& add_pretrained(const std::string& name, const Matrix& rows, bool trainable = true);

  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  std::size_t index_of(const std::string& name) const;

  std::size_t size() const { return params_.size(); }
  Parameter& at(std::size_t i) { return params_[i]; }
  const Parameter& at(std::size_t i) const { return params_[i]; }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  std::size_t scalar_count(bool trainable_only = true) const;

  /// Zero-filled buffer with one matrix per parameter.
  GradBuffer zero_grads() const;

  /// Checkpoint container: magic, version, then name/shape/flag/raw
  /// little-endian doubles per parameter. Load requires identical names and
  /// shapes.
  void save(const std::filesystem::path& path) const;
  void load(const std::filesystem::path& path);

 private:
  std::deque<Parameter> params_;
  std::map<std::string, std::size_t> index_;
};

/// Draws the uniform-scaled initialization for `name`; exposed for tests.
Matrix uniform_scaled(std::size_t rows, std::size_t cols, std::uint64_t seed,
                      const std::string& name);

}  // namespace grec::nn
