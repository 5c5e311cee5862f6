#include "grec/autodiff.hpp"

#include <cmath>
#include <stdexcept>

#include "grec/error.hpp"

namespace grec::nn {

void Tape::rewind(std::size_t count) {
  if (count >= nodes_.size()) return;
  nodes_.resize(count);
  std::erase_if(param_nodes_, [&](const auto& kv) { return kv.second >= static_cast<int>(count); });
}

Var Tape::constant(Matrix m) { return push(std::move(m)); }

Var Tape::param(ParameterStore& store, const std::string& name) {
  return param(store, store.index_of(name));
}

Var Tape::param(ParameterStore& store, std::size_t index) {
  if (auto it = param_nodes_.find(index); it != param_nodes_.end()) return Var{this, it->second};
  Node n;
  n.external = &store.at(index).value;
  n.param_index = static_cast<int>(index);
  nodes_.push_back(std::move(n));
  const int id = static_cast<int>(nodes_.size() - 1);
  param_nodes_[index] = id;
  return Var{this, id};
}

Var Tape::push(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size() - 1)};
}

void Tape::set_backward(Var v, Backward fn) {
  if (record_) nodes_[static_cast<std::size_t>(v.id)].backward = std::move(fn);
}

Matrix& Tape::grad_ref(int id) {
  auto& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.empty()) {
    const Matrix& v = n.external ? *n.external : n.value;
    n.grad = Matrix(v.rows(), v.cols());
  }
  return n.grad;
}

Matrix Tape::grad(Var v) const {
  const auto& n = nodes_[static_cast<std::size_t>(v.id)];
  if (!n.grad.empty()) return n.grad;
  const Matrix& val = value(v.id);
  return Matrix(val.rows(), val.cols());
}

void Tape::backward(Var loss) {
  if (!record_) throw Error("backward() on a non-recording tape");
  if (value(loss.id).size() != 1) throw Error("backward() target must be a scalar");
  for (auto& n : nodes_) n.grad = Matrix();
  grad_ref(loss.id)[0] = 1.0;
  for (int i = loss.id; i >= 0; --i) {
    auto& n = nodes_[static_cast<std::size_t>(i)];
    if (n.grad.empty() || !n.backward) continue;
    n.backward(*this);
  }
}

void Tape::accumulate(const ParameterStore& store, GradBuffer& grads) const {
  for (const auto& n : nodes_) {
    if (n.param_index < 0 || n.grad.empty()) continue;
    const auto idx = static_cast<std::size_t>(n.param_index);
    if (!store.at(idx).trainable) continue;
    auto& dst = grads[idx].data();
    const auto& src = n.grad.data();
    for (std::size_t k = 0; k < src.size(); ++k) dst[k] += src[k];
  }
}

namespace {

void require(bool ok, const char* op) {
  if (!ok) throw Error(std::string("shape mismatch in ") + op);
}

void gemm_acc(const Matrix& a, bool ta, const Matrix& b, bool tb, Matrix& c) {
  // c += op(a) * op(b)
  const std::size_t m = ta ? a.cols() : a.rows();
  const std::size_t k = ta ? a.rows() : a.cols();
  const std::size_t n = tb ? b.rows() : b.cols();
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c.data().data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ta ? a(p, i) : a(i, p);
      if (av == 0.0) continue;
      if (!tb) {
        const double* brow = b.data().data() + p * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      } else {
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * b(j, p);
      }
    }
  }
}

template <typename F>
Var unary(Var a, F&& f) {
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  return a.tape->push(std::move(y));
}

}  // namespace

Var matmul(Var a, Var b) {
  const Matrix& x = a.value();
  const Matrix& w = b.value();
  require(x.cols() == w.rows(), "matmul");
  Matrix y(x.rows(), w.cols());
  gemm_acc(x, false, w, false, y);
  Var out = a.tape->push(std::move(y));
  a.tape->set_backward(out, [a, b, out](Tape& t) {
    const Matrix& g = t.grad_ref(out.id);
    gemm_acc(g, false, t.value(b.id), true, t.grad_ref(a.id));
    gemm_acc(t.value(a.id), true, g, false, t.grad_ref(b.id));
  });
  return out;
}

Var matmul_nt(Var a, Var b) {
  const Matrix& x = a.value();
  const Matrix& w = b.value();
  require(x.cols() == w.cols(), "matmul_nt");
  Matrix y(x.rows(), w.rows());
  gemm_acc(x, false, w, true, y);
  Var out = a.tape->push(std::move(y));
  a.tape->set_backward(out, [a, b, out](Tape& t) {
    const Matrix& g = t.grad_ref(out.id);
    gemm_acc(g, false, t.value(b.id), false, t.grad_ref(a.id));
    gemm_acc(g, true, t.value(a.id), false, t.grad_ref(b.id));
  });
  return out;
}

Var transpose(Var a) {
  const Matrix& x = a.value();
  Matrix y(x.cols(), x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) y(j, i) = x(i, j);
  Var out = a.tape->push(std::move(y));
  a.tape->set_backward(out, [a, out](Tape& t) {
    const Matrix& g = t.grad_ref(out.id);
    Matrix& ga = t.grad_ref(a.id);
    for (std::size_t i = 0; i < ga.rows(); ++i)
      for (std::size_t j = 0; j < ga.cols(); ++j) ga(i, j) += g(j, i);
  });
  return out;
}

Var add(Var a, Var b) {
  const Matrix& x = a.value();
  const Matrix& z = b.value();
  require(x.same_shape(z), "add");
  Matrix y = x;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += z[i];
  Var out = a.tape->push(std::move(y));
  a.tape->set_backward(out, [a, b, out](Tape& t) {
    const Matrix& g = t.grad_ref(out.id);
    auto& ga = t.grad_ref(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    auto& gb = t.grad_ref(b.id);
    for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
  });
  return out;
}

Var sub(Var a, Var b) {
  const Matrix& x = a.value();
  const Matrix& z = b.value();
  require(x.same_shape(z), "sub");
  Matrix y = x;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= z[i];
  Var out = a.tape->push(std::move(y));
  a.tape->set_backward(out, [a, b, out](Tape& t) {
    const Matrix& g = t.grad_ref(out.id);
    auto& ga = t.grad_ref(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    auto& gb = t.grad_ref(b.id);
    for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
  });
  return out;
}

Var mul(Var a, Var b) {
  const Matrix& x = a.value();
  const Matrix& z = b.value();
  require(x.same_shape(z), "mul");
  Matrix y = x;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= z[i];
  Var out = a.tape->push(std::move(y));
  a.tape->set_backward(out, [a, b, out](Tape& t) {
    const Matrix& g = t.grad_ref(out.id);
    const Matrix& xa = t.value(a.id);
    const Matrix& xb = t.value(b.id);
    {
      auto& ga = t.grad_ref(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * xb[i];
    }
    auto& gb = t.grad_ref(b.id);
    for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * xa[i];
  });
  return out;
}

Var add_row(Var a, Var row) {
  const Matrix& x = a.value();
  const Matrix& r = row.value();
  require(r.rows() == 1 && r.cols() == x.cols(), "add_row");
  Matrix y = x;
  for (std::size_t i = 0; i < y.rows(); ++i)
    for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) += r[j];
  Var out = a.tape->push(std::move(y));
  a.tape->set_backward(out, [a, row, out](Tape& t) {
    const Matrix& g = t.grad_ref(out.id);
    auto& ga = t.grad_ref(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    auto& gr = t.grad_ref(row.id);
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) gr[j] += g(i, j);
  });
  return out;
}

Var mul_col(Var a, Var col) {
  const Matrix& x = a.value();
  const Matrix& c = col.value();
  require(c.cols() == 1 && c.rows() == x.rows(), "mul_col");
  Matrix y = x;
  for (std::size_t i = 0; i < y.rows(); ++i)
    for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) *= c[i];
  Var out = a.tape->push(std::move(y));
  a.tape->set_backward(out, [a, col, out](Tape& t) {
    const Matrix& g = t.grad_ref(out.id);
    const Matrix& x = t.value(a.id);
    const Matrix& c = t.value(col.id);
    {
      auto& ga = t.grad_ref(a.id);
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) ga(i, j) += g(i, j) * c[i];
    }
    auto& gc = t.grad_ref(col.id);
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) gc[i] += g(i, j) * x(i, j);
  });
  return out;
}

Var scale(Var a, double s) {
  Var out = unary(a, [s](double v) { return v * s; });
  a.tape->set_backward(out, [a, out, s](Tape& t) {
    const Matrix& g = t.grad_ref(out.id);
    auto& ga = t.grad_ref(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
  });
  return out;
}

Var add_scalar(Var a, double s) {
  Var out = unary(a, [s](double v) { return v + s; });
  a.tape->set_backward(out, [a, out](Tape& t) {
    const Matrix& g = t.grad_ref(out.id);
    auto& ga = t.grad_ref(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
  return out;
}

Var relu(Var a) {
  Var out = unary(a, [](double v) { return v > 0.0 ? v : 0.0; });
  a.tape->set_backward(out, [a, out](Tape& t) {
    const Matrix& g = t.grad_ref(out.id);
    const Matrix& x = t.value(a.id);
    auto& ga = t.grad_ref(a.id);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (x[i] > 0.0) ga[i] += g[i];
  });
  return out;
}

Var sigmoid(Var a) {
  Var out = unary(a, [](double v) {
    if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
  a.tape->set_backward(out, [a, out](Tape& t) {
    const Matrix& g = t.grad_ref(out.id);
    const Matrix& y = t.value(out.id);
    auto& ga = t.grad_ref(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
  });
  return out;
}

Var tanh(Var a) {
  Var out = unary(a, [](double v) { return std::tanh(v); });
  a.tape->set_backward(out, [a, out](Tape& t) {
    const Matrix& g = t.grad_ref(out.id);
    const Matrix& y = t.value(out.id);
    auto& ga = t.grad_ref(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
  });
  return out;
}

Var log(Var a) {
  Var out = unary(a, [](double v) { return std::log(v); });
  a.tape->set_backward(out, [a, out](Tape& t) {
    const Matrix& g = t.grad_ref(out.id);
    const Matrix& x = t.value(a.id);
    auto& ga = t.grad_ref(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / x[i];
  });
  return out;
}

Var softmax_rows(Var a) {
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto in = x.row_span(i);
    auto o = y.row_span(i);
    double mx = in[0];
    for (double v : in) mx = std::max(mx, v);
    double z = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      o[j] = std::exp(in[j] - mx);
      z += o[j];
    }
    for (double& v : o) v /= z;
  }
  Var out = a.tape->push(std::move(y));
  a.tape->set_backward(out, [a, out](Tape& t) {
    const Matrix& g = t.grad_ref(out.id);
    const Matrix& y = t.value(out.id);
    auto& ga = t.grad_ref(a.id);
    for (std::size_t i = 0; i < y.rows(); ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < y.cols(); ++j) dot += g(i, j) * y(i, j);
      for (std::size_t j = 0; j < y.cols(); ++j) ga(i, j) += y(i, j) * (g(i, j) - dot);
    }
  });
  return out;
}

Var log_softmax_rows(Var a) {
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto in = x.row_span(i);
    double mx = in[0];
    for (double v : in) mx = std::max(mx, v);
    double z = 0.0;
    for (double v : in) z += std::exp(v - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < in.size(); ++j) y(i, j) = in[j] - lse;
  }
  Var out = a.tape->push(std::move(y));
  a.tape->set_backward(out, [a, out](Tape& t) {
    const Matrix& g = t.grad_ref(out.id);
    const Matrix& y = t.value(out.id);
    auto& ga = t.grad_ref(a.id);
    for (std::size_t i = 0; i < y.rows(); ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < y.cols(); ++j) sum += g(i, j);
      for (std::size_t j = 0; j < y.cols(); ++j) ga(i, j) += g(i, j) - std::exp(y(i, j)) * sum;
    }
  });
  return out;
}

Var gather_rows(Var a, std::vector<int> rows) {
  const Matrix& x = a.value();
  Matrix y(rows.size(), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] >= 0 && static_cast<std::size_t>(rows[i]) < x.rows(), "gather_rows");
    auto src = x.row_span(static_cast<std::size_t>(rows[i]));
    std::copy(src.begin(), src.end(), y.row_span(i).begin());
  }
  Var out = a.tape->push(std::move(y));
  a.tape->set_backward(out, [a, out, rows = std::move(rows)](Tape& t) {
    const Matrix& g = t.grad_ref(out.id);
    auto& ga = t.grad_ref(a.id);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto dst = ga.row_span(static_cast<std::size_t>(rows[i]));
      auto src = g.row_span(i);
      for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
    }
  });
  return out;
}

Var slice_rows(Var a, std::size_t first, std::size_t count) {
  const Matrix& x = a.value();
  require(first + count <= x.rows(), "slice_rows");
  Matrix y(count, x.cols());
  std::copy(x.data().begin() + static_cast<std::ptrdiff_t>(first * x.cols()),
            x.data().begin() + static_cast<std::ptrdiff_t>((first + count) * x.cols()),
            y.data().begin());
  Var out = a.tape->push(std::move(y));
  a.tape->set_backward(out, [a, out, first](Tape& t) {
    const Matrix& g = t.grad_ref(out.id);
    auto& ga = t.grad_ref(a.id);
    const std::size_t off = first * ga.cols();
    for (std::size_t i = 0; i < g.size(); ++i) ga[off + i] += g[i];
  });
  return out;
}

Var slice_cols(Var a, std::size_t first, std::size_t count) {
  const Matrix& x = a.value();
  require(first + count <= x.cols(), "slice_cols");
  Matrix y(x.rows(), count);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < count; ++j) y(i, j) = x(i, first + j);
  Var out = a.tape->push(std::move(y));
  a.tape->set_backward(out, [a, out, first](Tape& t) {
    const Matrix& g = t.grad_ref(out.id);
    auto& ga = t.grad_ref(a.id);
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) ga(i, first + j) += g(i, j);
  });
  return out;
}

Var concat_rows(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_rows");
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  for (const auto& p : parts) {
    require(p.cols() == cols, "concat_rows");
    rows += p.rows();
  }
  Matrix y(rows, cols);
  std::size_t off = 0;
  for (const auto& p : parts) {
    const auto& d = p.value().data();
    std::copy(d.begin(), d.end(), y.data().begin() + static_cast<std::ptrdiff_t>(off));
    off += d.size();
  }
  Tape* tape = parts.front().tape;
  Var out = tape->push(std::move(y));
  tape->set_backward(out, [parts, out](Tape& t) {
    const Matrix& g = t.grad_ref(out.id);
    std::size_t off = 0;
    for (const auto& p : parts) {
      auto& gp = t.grad_ref(p.id);
      for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[off + i];
      off += gp.size();
    }
  });
  return out;
}

Var concat_cols(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_cols");
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (const auto& p : parts) {
    require(p.rows() == rows, "concat_cols");
    cols += p.cols();
  }
  Matrix y(rows, cols);
  std::size_t off = 0;
  for (const auto& p : parts) {
    const Matrix& x = p.value();
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < x.cols(); ++j) y(i, off + j) = x(i, j);
    off += x.cols();
  }
  Tape* tape = parts.front().tape;
  Var out = tape->push(std::move(y));
  tape->set_backward(out, [parts, out](Tape& t) {
    const Matrix& g = t.grad_ref(out.id);
    std::size_t off = 0;
    for (const auto& p : parts) {
      auto& gp = t.grad_ref(p.id);
      for (std::size_t i = 0; i < gp.rows(); ++i)
        for (std::size_t j = 0; j < gp.cols(); ++j) gp(i, j) += g(i, off + j);
      off += gp.cols();
    }
  });
  return out;
}

Var mean_rows(Var a) {
  const Matrix& x = a.value();
  require(x.rows() > 0, "mean_rows");
  Matrix y(1, x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) y[j] += x(i, j);
  const double inv = 1.0 / static_cast<double>(x.rows());
  for (auto& v : y.data()) v *= inv;
  Var out = a.tape->push(std::move(y));
  a.tape->set_backward(out, [a, out, inv](Tape& t) {
    const Matrix& g = t.grad_ref(out.id);
    auto& ga = t.grad_ref(a.id);
    for (std::size_t i = 0; i < ga.rows(); ++i)
      for (std::size_t j = 0; j < ga.cols(); ++j) ga(i, j) += g[j] * inv;
  });
  return out;
}

Var sum_all(Var a) {
  const Matrix& x = a.value();
  double s = 0.0;
  for (double v : x.data()) s += v;
  Var out = a.tape->push(Matrix(1, 1, s));
  a.tape->set_backward(out, [a, out](Tape& t) {
    const double g = t.grad_ref(out.id)[0];
    for (auto& v : t.grad_ref(a.id).data()) v += g;
  });
  return out;
}

Var shift_rows(Var a, int offset) {
  const Matrix& x = a.value();
  const auto n = static_cast<int>(x.rows());
  Matrix y(x.rows(), x.cols());
  for (int i = 0; i < n; ++i) {
    const int src = i + offset;
    if (src < 0 || src >= n) continue;
    auto s = x.row_span(static_cast<std::size_t>(src));
    std::copy(s.begin(), s.end(), y.row_span(static_cast<std::size_t>(i)).begin());
  }
  Var out = a.tape->push(std::move(y));
  a.tape->set_backward(out, [a, out, offset, n](Tape& t) {
    const Matrix& g = t.grad_ref(out.id);
    auto& ga = t.grad_ref(a.id);
    for (int i = 0; i < n; ++i) {
      const int src = i + offset;
      if (src < 0 || src >= n) continue;
      auto d = ga.row_span(static_cast<std::size_t>(src));
      auto s = g.row_span(static_cast<std::size_t>(i));
      for (std::size_t j = 0; j < d.size(); ++j) d[j] += s[j];
    }
  });
  return out;
}

Var layer_norm(Var a, Var gain, Var bias, double eps) {
  const Matrix& x = a.value();
  const Matrix& g = gain.value();
  const Matrix& b = bias.value();
  require(g.cols() == x.cols() && b.cols() == x.cols(), "layer_norm");
  const std::size_t n = x.cols();
  Matrix xhat(x.rows(), n);
  std::vector<double> inv_std(x.rows());
  Matrix y(x.rows(), n);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += x(i, j);
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (x(i, j) - mu) * (x(i, j) - mu);
    var /= static_cast<double>(n);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      xhat(i, j) = (x(i, j) - mu) * inv_std[i];
      y(i, j) = xhat(i, j) * g[j] + b[j];
    }
  }
  Var out = a.tape->push(std::move(y));
  a.tape->set_backward(out, [a, gain, bias, out, xhat = std::move(xhat),
                             inv_std = std::move(inv_std), n](Tape& t) {
    const Matrix& dy = t.grad_ref(out.id);
    const Matrix& g = t.value(gain.id);
    {
      auto& gg = t.grad_ref(gain.id);
      auto& gb = t.grad_ref(bias.id);
      for (std::size_t i = 0; i < dy.rows(); ++i)
        for (std::size_t j = 0; j < n; ++j) {
          gg[j] += dy(i, j) * xhat(i, j);
          gb[j] += dy(i, j);
        }
    }
    auto& ga = t.grad_ref(a.id);
    const double dn = static_cast<double>(n);
    for (std::size_t i = 0; i < dy.rows(); ++i) {
      double sum_dx = 0.0, sum_dx_x = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double dxh = dy(i, j) * g[j];
        sum_dx += dxh;
        sum_dx_x += dxh * xhat(i, j);
      }
      for (std::size_t j = 0; j < n; ++j) {
        const double dxh = dy(i, j) * g[j];
        ga(i, j) += inv_std[i] / dn * (dn * dxh - sum_dx - xhat(i, j) * sum_dx_x);
      }
    }
  });
  return out;
}

Var pick(Var a, std::vector<std::pair<int, int>> cells) {
  const Matrix& x = a.value();
  Matrix y(cells.size(), 1);
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const auto [r, c] = cells[k];
    require(r >= 0 && c >= 0 && static_cast<std::size_t>(r) < x.rows() &&
                static_cast<std::size_t>(c) < x.cols(),
            "pick");
    y[k] = x(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
  }
  Var out = a.tape->push(std::move(y));
  a.tape->set_backward(out, [a, out, cells = std::move(cells)](Tape& t) {
    const Matrix& g = t.grad_ref(out.id);
    auto& ga = t.grad_ref(a.id);
    for (std::size_t k = 0; k < cells.size(); ++k)
      ga(static_cast<std::size_t>(cells[k].first), static_cast<std::size_t>(cells[k].second)) +=
          g[k];
  });
  return out;
}

}  // namespace grec::nn
