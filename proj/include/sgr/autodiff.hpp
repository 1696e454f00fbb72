#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sgr/matrix.hpp"

namespace sgr {

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  bool has_grad = false;
};

// Ordered, named collection of trainable matrices. Copyable, so a snapshot
// of the best model is just a copy.
class ParameterSet {
 public:
  std::size_t add(std::string name, std::size_t rows, std::size_t cols);

  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  std::size_t size() const noexcept { return params_.size(); }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  // Index of the parameter with this name, or size() if absent.
  std::size_t index_of(const std::string& name) const;
  std::size_t scalar_count() const;

  void zero_grad();
  // Zero-filled buffers shaped like each parameter.
  std::vector<Matrix> gradient_buffers() const;
  // grad += buffers; marks every parameter as having a gradient.
  void accumulate(std::span<const Matrix> buffers);
  double grad_norm() const;
  void scale_grad(double factor);

 private:
  std::vector<Parameter> params_;
};

}  // namespace sgr

// Define-by-run reverse-mode differentiation over dense matrices.
namespace sgr::ad {

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while its tape lives.
class Tensor {
 public:
  Tensor() = default;

  std::size_t rows() const;
  std::size_t cols() const;
  const Matrix& value() const;
  double scalar() const;
  Tape* tape() const noexcept { return tape_; }
  std::uint32_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Tensor(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, std::uint32_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Tensor constant(Matrix value);
  // Leaf bound to parameter `index` of `params`; the set must outlive the tape.
  Tensor parameter(const ParameterSet& params, std::size_t index);

  const Matrix& value(std::uint32_t id) const;
  // Gradient buffer of a node, allocated on first use.
  Matrix& grad(std::uint32_t id);
  bool requires_grad(std::uint32_t id) const { return nodes_[id].requires_grad; }

  // Records an op result. Throws NumericError if `value` has a non-finite
  // entry. Requires grad iff any parent does.
  Tensor record(const char* op, Matrix value, std::initializer_list<Tensor> parents,
                Backward backward);
  Tensor record(const char* op, Matrix value, std::span<const Tensor> parents, Backward backward);

  // Accumulates d loss / d param into the parameters' grad buffers.
  void backward(const Tensor& loss, ParameterSet& params);
  // Accumulates into caller-owned buffers indexed like the parameter set.
  void backward(const Tensor& loss, std::span<Matrix> grads);

  bool consumed() const noexcept { return consumed_; }
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    const Matrix* external = nullptr;
    Matrix grad;
    Backward backward;
    std::int64_t param_index = -1;
    bool requires_grad = false;
  };

  void run_backward(const Tensor& loss);

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

// Primitives. Shape mismatches throw DimensionError.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
Tensor add_scalar(const Tensor& x, double value);
// x[r x c] + bias[1 x c] on every row.
Tensor add_bias(const Tensor& x, const Tensor& bias);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor concat_rows(std::span<const Tensor> parts);
// Row i of x times scalar s[i]; s is rows x 1.
Tensor scale_rows(const Tensor& x, const Tensor& s);
Tensor relu(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
// Inverted dropout; identity when `train` is false or p == 0.
Tensor dropout(const Tensor& x, double p, bool train, std::mt19937_64& rng);
// Output row i = x row index[i].
Tensor row_select(const Tensor& x, std::span<const int> index);
// out[rows x c]: out row index[i] += x row i. Equals A*x for the 0/1 matrix A
// with A(index[i], i) = 1.
Tensor scatter_add_rows(const Tensor& x, std::span<const int> index, std::size_t rows);
Tensor sum(const Tensor& x);
// Columns [begin, begin + count) of x.
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count);

// Gated recurrent unit with gate blocks ordered (reset, update, candidate)
// along the columns of the d x 3d weights:
//   r = sigmoid(x Wir + bir + h Whr + bhr)
//   z = sigmoid(x Wiz + biz + h Whz + bhz)
//   n = tanh(x Win + bin + r * (h Whn + bhn))
//   h' = (1 - z) * n + z * h
struct GruWeights {
  Tensor w_ih, w_hh;  // d x 3d
  Tensor b_ih, b_hh;  // 1 x 3d
};

Tensor gru_cell(const Tensor& x, const Tensor& hidden, const GruWeights& w);

// Runs the cell over the rows of `inputs` in order from a zero hidden state;
// output row i is the hidden state after consuming input row i.
Tensor gru_sequence(const Tensor& inputs, const GruWeights& w);

}  // namespace sgr::ad
