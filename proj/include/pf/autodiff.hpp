#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "pf/conv.hpp"
#include "pf/tensor.hpp"

namespace pf {

/// Trainable tensor with a same-shaped gradient accumulator.
template <class T>
class Parameter {
 public:
  Parameter(std::string id, Tensor<T> value) : id_(std::move(id)), value_(std::move(value)), grad_(value_.shape()) {}

  const std::string& id() const noexcept { return id_; }
  Tensor<T>& value() noexcept { return value_; }
  const Tensor<T>& value() const noexcept { return value_; }
  Tensor<T>& grad() noexcept { return grad_; }
  const Tensor<T>& grad() const noexcept { return grad_; }
  void zero_grad() noexcept { grad_.fill(T{0}); }

 private:
  std::string id_;
  Tensor<T> value_;
  Tensor<T> grad_;
};

enum class Activation { identity, relu, sigmoid };

Activation parse_activation(std::string_view name);
const char* to_string(Activation a) noexcept;

/// How a latent row is rescaled before decoding.
enum class RowNorm {
  mean_square,  // y / ((1/N) sum y^2)
  unit_ball,    // y / ||y||
};

/// Handle to a node of a Graph.
struct Var {
  std::size_t index = std::numeric_limits<std::size_t>::max();
};

/// Tape of one forward pass. Nodes are appended in execution order, so the
/// index order is a topological order; backward walks it in reverse.
template <class T>
class Graph {
 public:
  Var constant(Tensor<T> value);
  Var param(Parameter<T>& p);

  const Tensor<T>& value(Var v) const { return nodes_.at(v.index).value; }
  // Gradient of the last backward() target with respect to v (empty if unreachable).
  const Tensor<T>& grad(Var v) const { return nodes_.at(v.index).grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  Var conv2d(Var x, Var kernel, const ConvGeometry& geom);
  Var conv2d_transpose(Var x, Var kernel, const ConvGeometry& geom);
  Var add_channel_bias(Var x, Var bias);  // x [B,C,H,W] + bias [C]
  Var dense(Var x, Var w, Var b);         // x [B,n] * w [n,m] + b [m]
  Var activation(Var x, Activation kind);
  Var reshape(Var x, Shape shape);
  Var add(Var a, Var b);
  Var scale(Var x, T factor);
  Var sum(Var x);
  Var mean(Var x);
  Var mse(Var prediction, Var target);  // mean of squared differences over all elements
  Var row_mean_square(Var y);           // [B,N] -> [B]
  // Throws ErrorKind::numeric when a row's scale is at or below `guard`.
  Var normalize_rows(Var y, RowNorm mode, T guard = T(1e-12));

  /// Reverse sweep from a scalar node. Reachable parameters accumulate d loss / d param.
  void backward(Var loss);

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    std::vector<std::size_t> inputs;
    std::function<void(Graph&, std::size_t)> backward;
    Parameter<T>* param = nullptr;
    bool needs_grad = false;
  };

  Var push(Tensor<T> value, std::vector<std::size_t> inputs, std::function<void(Graph&, std::size_t)> backward);
  Node& node(Var v) { return nodes_.at(v.index); }
  bool needs(std::size_t i) const { return nodes_[i].needs_grad; }
  void accumulate(std::size_t i, Tensor<T> g);

  std::vector<Node> nodes_;
};

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace pf
