#pragma once

#include <functional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "grec/parameters.hpp"
#include "grec/tensor.hpp"

namespace grec::nn {

class Tape;

/// Handle to a node on a Tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

/// Reverse-mode autodiff tape over dense matrices. A tape lives for one
/// forward/backward pass; parameter leaves reference the store's storage
/// directly and their gradients are harvested with accumulate().
class Tape {
 public:
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  Var constant(Matrix m);
  /// Leaf for a stored parameter; repeated calls return the same node.
  Var param(ParameterStore& store, const std::string& name);
  Var param(ParameterStore& store, std::size_t index);

  const Matrix& value(int id) const {
    const auto& n = nodes_[static_cast<std::size_t>(id)];
    return n.external ? *n.external : n.value;
  }
  /// Gradient of the last backward() target w.r.t. node `id` (zeros if none).
  Matrix grad(Var v) const;

  /// Seeds d(loss)/d(loss) = 1 and runs the recorded closures in reverse.
  void backward(Var loss);

  /// Adds gradients of trainable parameter leaves into `grads`.
  void accumulate(const ParameterStore& store, GradBuffer& grads) const;

  // Node construction used by the op implementations.
  using Backward = std::function<void(Tape&)>;
  Var push(Matrix value);
  void set_backward(Var v, Backward fn);
  Matrix& grad_ref(int id);
  bool has_grad(int id) const { return !nodes_[static_cast<std::size_t>(id)].grad.empty(); }

  std::size_t node_count() const { return nodes_.size(); }
  /// Drops every node created after the first `count`.
  void rewind(std::size_t count);

 private:
  struct Node {
    Matrix value;
    const Matrix* external = nullptr;
    Matrix grad;
    Backward backward;
    int param_index = -1;
  };

  bool record_;
  std::vector<Node> nodes_;
  std::unordered_map<std::size_t, int> param_nodes_;
};

inline const Matrix& Var::value() const { return tape->value(id); }

// ---- operations -----------------------------------------------------------

Var matmul(Var a, Var b);
/// a * b^T
Var matmul_nt(Var a, Var b);
Var transpose(Var a);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
/// a (r x c) + row (1 x c) broadcast over rows.
Var add_row(Var a, Var row);
/// a (r x c) * col (r x 1) broadcast over columns.
Var mul_col(Var a, Var col);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);

Var relu(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var log(Var a);

Var softmax_rows(Var a);
Var log_softmax_rows(Var a);

Var gather_rows(Var a, std::vector<int> rows);
Var slice_rows(Var a, std::size_t first, std::size_t count);
Var slice_cols(Var a, std::size_t first, std::size_t count);
Var concat_rows(const std::vector<Var>& parts);
Var concat_cols(const std::vector<Var>& parts);

Var mean_rows(Var a);
Var sum_all(Var a);

/// Row t of the result is row t + offset of `a`, or zeros past either end.
Var shift_rows(Var a, int offset);

/// Per-row layer normalization with learned gain and bias (both 1 x c).
Var layer_norm(Var a, Var gain, Var bias, double eps = 1e-6);

/// Elements (r, c) gathered into an n x 1 column.
Var pick(Var a, std::vector<std::pair<int, int>> cells);

}  // namespace grec::nn
