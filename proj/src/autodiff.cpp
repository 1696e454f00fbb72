#include "sgr/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sgr/errors.hpp"
#include "sgr/kernels.hpp"

namespace sgr {

std::size_t ParameterSet::add(std::string name, std::size_t rows, std::size_t cols) {
  params_.push_back(Parameter{std::move(name), Matrix(rows, cols), Matrix(rows, cols), false});
  return params_.size() - 1;
}

std::size_t ParameterSet::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  return params_.size();
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) {
    p.grad = Matrix(p.value.rows, p.value.cols);
    p.has_grad = false;
  }
}

std::vector<Matrix> ParameterSet::gradient_buffers() const {
  std::vector<Matrix> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.emplace_back(p.value.rows, p.value.cols);
  return out;
}

void ParameterSet::accumulate(std::span<const Matrix> buffers) {
  if (buffers.size() != params_.size()) throw DimensionError("gradient buffer count mismatch");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    if (!buffers[i].same_shape(p.value)) throw DimensionError("gradient buffer shape mismatch");
    if (!p.grad.same_shape(p.value)) p.grad = Matrix(p.value.rows, p.value.cols);
    for (std::size_t k = 0; k < p.grad.size(); ++k) p.grad.data[k] += buffers[i].data[k];
    p.has_grad = true;
  }
}

double ParameterSet::grad_norm() const {
  double s = 0.0;
  for (const auto& p : params_) {
    if (!p.has_grad) continue;
    for (const double g : p.grad.data) s += g * g;
  }
  return std::sqrt(s);
}

void ParameterSet::scale_grad(double factor) {
  for (auto& p : params_) {
    for (double& g : p.grad.data) g *= factor;
  }
}

}  // namespace sgr

namespace sgr::ad {

std::size_t Tensor::rows() const { return value().rows; }
std::size_t Tensor::cols() const { return value().cols; }
const Matrix& Tensor::value() const { return tape_->value(id_); }

double Tensor::scalar() const {
  const auto& v = value();
  if (v.rows != 1 || v.cols != 1) throw DimensionError("tensor is not 1x1");
  return v.data[0];
}

Tensor Tape::constant(Matrix value) {
  if (consumed_) throw StateError("tape already consumed by backward()");
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Tensor Tape::parameter(const ParameterSet& params, std::size_t index) {
  if (consumed_) throw StateError("tape already consumed by backward()");
  if (index >= params.size()) throw DimensionError("parameter index out of range");
  Node n;
  n.external = &params[index].value;
  n.param_index = static_cast<std::int64_t>(index);
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Matrix& Tape::value(std::uint32_t id) const {
  const auto& n = nodes_[id];
  return n.external != nullptr ? *n.external : n.value;
}

Matrix& Tape::grad(std::uint32_t id) {
  auto& n = nodes_[id];
  if (n.grad.empty()) {
    const auto& v = value(id);
    n.grad = Matrix(v.rows, v.cols);
  }
  return n.grad;
}

Tensor Tape::record(const char* op, Matrix value, std::initializer_list<Tensor> parents,
                    Backward backward) {
  return record(op, std::move(value), std::span<const Tensor>(parents.begin(), parents.size()),
                std::move(backward));
}

Tensor Tape::record(const char* op, Matrix value, std::span<const Tensor> parents,
                    Backward backward) {
  if (consumed_) throw StateError("tape already consumed by backward()");
  for (const double x : value.data) {
    if (!std::isfinite(x)) throw NumericError(std::string("non-finite value produced by ") + op);
  }
  Node n;
  n.value = std::move(value);
  for (const auto& p : parents) {
    if (p.tape() != this) throw StateError(std::string(op) + ": operand from another tape");
    n.requires_grad = n.requires_grad || nodes_[p.id()].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

void Tape::run_backward(const Tensor& loss) {
  if (consumed_) throw StateError("backward() called twice on the same tape");
  if (loss.tape() != this) throw StateError("loss tensor belongs to another tape");
  const auto& lv = value(loss.id());
  if (lv.rows != 1 || lv.cols != 1) throw DimensionError("loss must be a 1x1 tensor");
  consumed_ = true;
  grad(loss.id()).data[0] = 1.0;
  for (std::uint32_t i = loss.id() + 1; i-- > 0;) {
    auto& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty() || !n.backward) continue;
    n.backward(*this, i);
  }
}

void Tape::backward(const Tensor& loss, ParameterSet& params) {
  run_backward(loss);
  for (auto& n : nodes_) {
    if (n.param_index < 0) continue;
    auto& p = params[static_cast<std::size_t>(n.param_index)];
    if (!p.grad.same_shape(p.value)) p.grad = Matrix(p.value.rows, p.value.cols);
    if (!n.grad.empty()) {
      for (std::size_t k = 0; k < p.grad.size(); ++k) p.grad.data[k] += n.grad.data[k];
    }
    p.has_grad = true;
  }
}

void Tape::backward(const Tensor& loss, std::span<Matrix> grads) {
  run_backward(loss);
  for (auto& n : nodes_) {
    if (n.param_index < 0 || n.grad.empty()) continue;
    auto& g = grads[static_cast<std::size_t>(n.param_index)];
    if (!g.same_shape(n.grad)) throw DimensionError("gradient buffer shape mismatch");
    for (std::size_t k = 0; k < g.size(); ++k) g.data[k] += n.grad.data[k];
  }
}

namespace {

void require(bool ok, const char* op, const std::string& detail) {
  if (!ok) throw DimensionError(std::string(op) + ": " + detail);
}

std::string shape(const Tensor& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

void add_into(Matrix& dst, const Matrix& src, double factor = 1.0) {
  for (std::size_t k = 0; k < dst.size(); ++k) dst.data[k] += factor * src.data[k];
}

template <typename Fn>
Matrix map(const Matrix& x, Fn&& fn) {
  Matrix out(x.rows, x.cols);
  for (std::size_t k = 0; k < x.size(); ++k) out.data[k] = fn(x.data[k]);
  return out;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.cols() == b.rows(), "matmul", shape(a) + " * " + shape(b));
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Matrix out(m, n);
  kernels::gemm(a.value().data, b.value().data, out.data, m, k, n);
  const auto ia = a.id(), ib = b.id();
  return a.tape()->record("matmul", std::move(out), {a, b},
                          [ia, ib, m, k, n](Tape& t, std::uint32_t self) {
                            const Matrix& g = t.grad(self);
                            if (t.requires_grad(ia)) {
                              kernels::gemm_nt(g.data, t.value(ib).data, t.grad(ia).data, m, k, n);
                            }
                            if (t.requires_grad(ib)) {
                              kernels::gemm_tn(t.value(ia).data, g.data, t.grad(ib).data, m, k, n);
                            }
                          });
}

namespace {

Tensor add_sub(const Tensor& a, const Tensor& b, double sign, const char* op) {
  require(a.value().same_shape(b.value()), op, shape(a) + " vs " + shape(b));
  Matrix out = a.value();
  add_into(out, b.value(), sign);
  const auto ia = a.id(), ib = b.id();
  return a.tape()->record(op, std::move(out), {a, b}, [ia, ib, sign](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(ia)) add_into(t.grad(ia), g);
    if (t.requires_grad(ib)) add_into(t.grad(ib), g, sign);
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return add_sub(a, b, 1.0, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return add_sub(a, b, -1.0, "sub"); }

Tensor hadamard(const Tensor& a, const Tensor& b) {
  require(a.value().same_shape(b.value()), "hadamard", shape(a) + " vs " + shape(b));
  Matrix out(a.rows(), a.cols());
  for (std::size_t k = 0; k < out.size(); ++k) out.data[k] = a.value().data[k] * b.value().data[k];
  const auto ia = a.id(), ib = b.id();
  return a.tape()->record("hadamard", std::move(out), {a, b}, [ia, ib](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(ia)) {
      auto& ga = t.grad(ia);
      const auto& vb = t.value(ib);
      for (std::size_t k = 0; k < g.size(); ++k) ga.data[k] += g.data[k] * vb.data[k];
    }
    if (t.requires_grad(ib)) {
      auto& gb = t.grad(ib);
      const auto& va = t.value(ia);
      for (std::size_t k = 0; k < g.size(); ++k) gb.data[k] += g.data[k] * va.data[k];
    }
  });
}

Tensor scale(const Tensor& x, double factor) {
  Matrix out = map(x.value(), [factor](double v) { return v * factor; });
  const auto ix = x.id();
  return x.tape()->record("scale", std::move(out), {x}, [ix, factor](Tape& t, std::uint32_t self) {
    add_into(t.grad(ix), t.grad(self), factor);
  });
}

Tensor add_scalar(const Tensor& x, double value) {
  Matrix out = map(x.value(), [value](double v) { return v + value; });
  const auto ix = x.id();
  return x.tape()->record("add_scalar", std::move(out), {x},
                          [ix](Tape& t, std::uint32_t self) { add_into(t.grad(ix), t.grad(self)); });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  require(bias.rows() == 1 && bias.cols() == x.cols(), "add_bias", shape(x) + " + " + shape(bias));
  Matrix out = x.value();
  const auto& b = bias.value();
  for (std::size_t i = 0; i < out.rows; ++i) {
    for (std::size_t j = 0; j < out.cols; ++j) out(i, j) += b.data[j];
  }
  const auto ix = x.id(), ib = bias.id();
  return x.tape()->record("add_bias", std::move(out), {x, bias}, [ix, ib](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(ix)) add_into(t.grad(ix), g);
    if (t.requires_grad(ib)) {
      auto& gb = t.grad(ib);
      for (std::size_t i = 0; i < g.rows; ++i) {
        for (std::size_t j = 0; j < g.cols; ++j) gb.data[j] += g(i, j);
      }
    }
  });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  require(!parts.empty(), "concat_cols", "no operands");
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  for (const auto& p : parts) {
    require(p.rows() == rows, "concat_cols", "row count mismatch " + shape(p));
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<std::uint32_t> ids;
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    const auto& v = p.value();
    for (std::size_t i = 0; i < rows; ++i) {
      std::copy(v.row(i).begin(), v.row(i).end(), out.row(i).begin() + static_cast<std::ptrdiff_t>(off));
    }
    ids.push_back(p.id());
    offsets.push_back(off);
    off += v.cols;
  }
  return parts[0].tape()->record(
      "concat_cols", std::move(out), parts,
      [ids, offsets](Tape& t, std::uint32_t self) {
        const Matrix& g = t.grad(self);
        for (std::size_t k = 0; k < ids.size(); ++k) {
          if (!t.requires_grad(ids[k])) continue;
          auto& gp = t.grad(ids[k]);
          for (std::size_t i = 0; i < gp.rows; ++i) {
            for (std::size_t j = 0; j < gp.cols; ++j) gp(i, j) += g(i, offsets[k] + j);
          }
        }
      });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  require(!parts.empty(), "concat_rows", "no operands");
  const std::size_t cols = parts[0].cols();
  std::size_t rows = 0;
  for (const auto& p : parts) {
    require(p.cols() == cols, "concat_rows", "column count mismatch " + shape(p));
    rows += p.rows();
  }
  Matrix out(rows, cols);
  std::vector<std::uint32_t> ids;
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    const auto& v = p.value();
    std::copy(v.data.begin(), v.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(off * cols));
    ids.push_back(p.id());
    offsets.push_back(off);
    off += v.rows;
  }
  return parts[0].tape()->record(
      "concat_rows", std::move(out), parts,
      [ids, offsets, cols](Tape& t, std::uint32_t self) {
        const Matrix& g = t.grad(self);
        for (std::size_t k = 0; k < ids.size(); ++k) {
          if (!t.requires_grad(ids[k])) continue;
          auto& gp = t.grad(ids[k]);
          const double* src = g.data.data() + offsets[k] * cols;
          for (std::size_t q = 0; q < gp.size(); ++q) gp.data[q] += src[q];
        }
      });
}

Tensor scale_rows(const Tensor& x, const Tensor& s) {
  require(s.cols() == 1 && s.rows() == x.rows(), "scale_rows", shape(x) + " by " + shape(s));
  Matrix out = x.value();
  const auto& sv = s.value();
  for (std::size_t i = 0; i < out.rows; ++i) {
    for (double& v : out.row(i)) v *= sv.data[i];
  }
  const auto ix = x.id(), is = s.id();
  return x.tape()->record("scale_rows", std::move(out), {x, s}, [ix, is](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(ix)) {
      auto& gx = t.grad(ix);
      const auto& sv = t.value(is);
      for (std::size_t i = 0; i < g.rows; ++i) {
        for (std::size_t j = 0; j < g.cols; ++j) gx(i, j) += g(i, j) * sv.data[i];
      }
    }
    if (t.requires_grad(is)) {
      auto& gs = t.grad(is);
      const auto& xv = t.value(ix);
      for (std::size_t i = 0; i < g.rows; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < g.cols; ++j) acc += g(i, j) * xv(i, j);
        gs.data[i] += acc;
      }
    }
  });
}

Tensor relu(const Tensor& x) {
  Matrix out = map(x.value(), [](double v) { return v > 0.0 ? v : 0.0; });
  const auto ix = x.id();
  return x.tape()->record("relu", std::move(out), {x}, [ix](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    const auto& xv = t.value(ix);
    auto& gx = t.grad(ix);
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (xv.data[k] > 0.0) gx.data[k] += g.data[k];
    }
  });
}

Tensor tanh(const Tensor& x) {
  Matrix out = map(x.value(), [](double v) { return std::tanh(v); });
  const auto ix = x.id();
  return x.tape()->record("tanh", std::move(out), {x}, [ix](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    const auto& y = t.value(self);
    auto& gx = t.grad(ix);
    for (std::size_t k = 0; k < g.size(); ++k) gx.data[k] += g.data[k] * (1.0 - y.data[k] * y.data[k]);
  });
}

Tensor sigmoid(const Tensor& x) {
  Matrix out = map(x.value(), [](double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
  const auto ix = x.id();
  return x.tape()->record("sigmoid", std::move(out), {x}, [ix](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    const auto& y = t.value(self);
    auto& gx = t.grad(ix);
    for (std::size_t k = 0; k < g.size(); ++k) gx.data[k] += g.data[k] * y.data[k] * (1.0 - y.data[k]);
  });
}

Tensor dropout(const Tensor& x, double p, bool train, std::mt19937_64& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw DimensionError("dropout probability must be in [0, 1)");
  if (!train || p == 0.0) return x;
  std::bernoulli_distribution keep(1.0 - p);
  const double factor = 1.0 / (1.0 - p);
  std::vector<double> mask(x.value().size());
  for (double& m : mask) m = keep(rng) ? factor : 0.0;
  Matrix out = x.value();
  for (std::size_t k = 0; k < out.size(); ++k) out.data[k] *= mask[k];
  const auto ix = x.id();
  return x.tape()->record("dropout", std::move(out), {x},
                          [ix, mask = std::move(mask)](Tape& t, std::uint32_t self) {
                            const Matrix& g = t.grad(self);
                            auto& gx = t.grad(ix);
                            for (std::size_t k = 0; k < g.size(); ++k) gx.data[k] += g.data[k] * mask[k];
                          });
}

Tensor row_select(const Tensor& x, std::span<const int> index) {
  const auto& xv = x.value();
  Matrix out(index.size(), xv.cols);
  for (std::size_t i = 0; i < index.size(); ++i) {
    require(index[i] >= 0 && static_cast<std::size_t>(index[i]) < xv.rows, "row_select",
            "index " + std::to_string(index[i]) + " out of range for " + shape(x));
    const auto src = xv.row(static_cast<std::size_t>(index[i]));
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  const auto ix = x.id();
  std::vector<int> idx(index.begin(), index.end());
  return x.tape()->record("row_select", std::move(out), {x},
                          [ix, idx = std::move(idx)](Tape& t, std::uint32_t self) {
                            auto& gx = t.grad(ix);
                            kernels::scatter_add(t.grad(self).data, idx, gx.data, gx.cols);
                          });
}

Tensor scatter_add_rows(const Tensor& x, std::span<const int> index, std::size_t rows) {
  require(index.size() == x.rows(), "scatter_add_rows", "index length does not match " + shape(x));
  for (const int r : index) {
    require(r >= 0 && static_cast<std::size_t>(r) < rows, "scatter_add_rows",
            "index " + std::to_string(r) + " out of range");
  }
  Matrix out(rows, x.cols());
  kernels::scatter_add(x.value().data, index, out.data, x.cols());
  const auto ix = x.id();
  std::vector<int> idx(index.begin(), index.end());
  return x.tape()->record("scatter_add_rows", std::move(out), {x},
                          [ix, idx = std::move(idx)](Tape& t, std::uint32_t self) {
                            const Matrix& g = t.grad(self);
                            auto& gx = t.grad(ix);
                            for (std::size_t i = 0; i < idx.size(); ++i) {
                              const auto src = g.row(static_cast<std::size_t>(idx[i]));
                              auto dst = gx.row(i);
                              for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
                            }
                          });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (const double v : x.value().data) s += v;
  const auto ix = x.id();
  return x.tape()->record("sum", Matrix(1, 1, s), {x}, [ix](Tape& t, std::uint32_t self) {
    const double g = t.grad(self).data[0];
    for (double& v : t.grad(ix).data) v += g;
  });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count) {
  require(begin + count <= x.cols(), "slice_cols", "range out of bounds for " + shape(x));
  const auto& xv = x.value();
  Matrix out(xv.rows, count);
  for (std::size_t i = 0; i < xv.rows; ++i) {
    for (std::size_t j = 0; j < count; ++j) out(i, j) = xv(i, begin + j);
  }
  const auto ix = x.id();
  return x.tape()->record("slice_cols", std::move(out), {x}, [ix, begin](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    auto& gx = t.grad(ix);
    for (std::size_t i = 0; i < g.rows; ++i) {
      for (std::size_t j = 0; j < g.cols; ++j) gx(i, begin + j) += g(i, j);
    }
  });
}

namespace {

// One recurrent step given the precomputed input projection x Wih + bih.
Tensor gru_step(const Tensor& input_gates, const Tensor& hidden, const GruWeights& w) {
  const std::size_t d = hidden.cols();
  const Tensor hidden_gates = add_bias(matmul(hidden, w.w_hh), w.b_hh);
  const Tensor reset = sigmoid(add(slice_cols(input_gates, 0, d), slice_cols(hidden_gates, 0, d)));
  const Tensor update = sigmoid(add(slice_cols(input_gates, d, d), slice_cols(hidden_gates, d, d)));
  const Tensor candidate =
      tanh(add(slice_cols(input_gates, 2 * d, d), hadamard(reset, slice_cols(hidden_gates, 2 * d, d))));
  return add(candidate, hadamard(update, sub(hidden, candidate)));
}

void check_gru(const Tensor& x, const Tensor& hidden, const GruWeights& w) {
  const std::size_t d = hidden.cols();
  require(x.cols() == d, "gru", "input width " + shape(x) + " does not match hidden " + shape(hidden));
  require(w.w_ih.rows() == d && w.w_ih.cols() == 3 * d && w.w_hh.rows() == d &&
              w.w_hh.cols() == 3 * d && w.b_ih.cols() == 3 * d && w.b_hh.cols() == 3 * d,
          "gru", "weight shapes do not match width " + std::to_string(d));
}

}  // namespace

Tensor gru_cell(const Tensor& x, const Tensor& hidden, const GruWeights& w) {
  require(x.rows() == 1 && hidden.rows() == 1, "gru_cell", "expects single rows");
  check_gru(x, hidden, w);
  return gru_step(add_bias(matmul(x, w.w_ih), w.b_ih), hidden, w);
}

Tensor gru_sequence(const Tensor& inputs, const GruWeights& w) {
  const std::size_t d = w.w_hh.rows();
  Tape& tape = *inputs.tape();
  Tensor hidden = tape.constant(Matrix(1, d));
  check_gru(inputs, hidden, w);
  const Tensor input_gates = add_bias(matmul(inputs, w.w_ih), w.b_ih);
  std::vector<Tensor> states;
  states.reserve(inputs.rows());
  for (std::size_t i = 0; i < inputs.rows(); ++i) {
    const int row[1] = {static_cast<int>(i)};
    hidden = gru_step(row_select(input_gates, row), hidden, w);
    states.push_back(hidden);
  }
  return concat_rows(states);
}

}  // namespace sgr::ad
