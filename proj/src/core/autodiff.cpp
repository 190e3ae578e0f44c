#include "pf/autodiff.hpp"

#include <Eigen/Core>
#include <cmath>

namespace pf {

namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapMat = Eigen::Map<RowMat<T>>;
template <class T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;

template <class T>
T sigmoid(T x) {
  // Branch keeps exp() from overflowing for large |x|.
  if (x >= 0) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <class T>
Tensor<T> scalar(T v) {
  return Tensor<T>(Shape{1}, std::vector<T>{v});
}

void require_same(const Shape& a, const Shape& b, const char* op) {
  require(a == b, ErrorKind::dimension, std::string(op) + ": shape " + shape_string(a) + " vs " + shape_string(b));
}

}  // namespace

Activation parse_activation(std::string_view name) {
  if (name == "identity") return Activation::identity;
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  fail(ErrorKind::config, "unknown activation '" + std::string(name) + "'");
}

const char* to_string(Activation a) noexcept {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
  }
  return "?";
}

template <class T>
Var Graph<T>::push(Tensor<T> value, std::vector<std::size_t> inputs,
                   std::function<void(Graph&, std::size_t)> backward) {
  Node n;
  n.value = std::move(value);
  for (std::size_t i : inputs) n.needs_grad = n.needs_grad || nodes_[i].needs_grad;
  n.inputs = std::move(inputs);
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

template <class T>
void Graph<T>::accumulate(std::size_t i, Tensor<T> g) {
  Tensor<T>& dst = nodes_[i].grad;
  if (dst.empty()) {
    dst = std::move(g);
    return;
  }
  for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += g[k];
}

template <class T>
Var Graph<T>::constant(Tensor<T> value) {
  return push(std::move(value), {}, nullptr);
}

template <class T>
Var Graph<T>::param(Parameter<T>& p) {
  Var v = push(p.value(), {}, nullptr);
  nodes_.back().param = &p;
  nodes_.back().needs_grad = true;
  return v;
}

template <class T>
Var Graph<T>::conv2d(Var x, Var kernel, const ConvGeometry& geom) {
  Tensor<T> out = conv2d_forward(value(x), value(kernel), geom);
  return push(std::move(out), {x.index, kernel.index}, [geom](Graph& g, std::size_t self) {
    const std::size_t xi = g.nodes_[self].inputs[0], ki = g.nodes_[self].inputs[1];
    const Tensor<T>& go = g.nodes_[self].grad;
    if (g.needs(xi))
      g.accumulate(xi, conv2d_backward_input(go, g.nodes_[ki].value, g.nodes_[xi].value.shape(), geom));
    if (g.needs(ki))
      g.accumulate(ki, conv2d_backward_kernel(go, g.nodes_[xi].value, g.nodes_[ki].value.shape(), geom));
  });
}

template <class T>
Var Graph<T>::conv2d_transpose(Var x, Var kernel, const ConvGeometry& geom) {
  Tensor<T> out = conv2d_transpose_forward(value(x), value(kernel), geom);
  return push(std::move(out), {x.index, kernel.index}, [geom](Graph& g, std::size_t self) {
    const std::size_t xi = g.nodes_[self].inputs[0], ki = g.nodes_[self].inputs[1];
    const Tensor<T>& go = g.nodes_[self].grad;
    if (g.needs(xi)) g.accumulate(xi, conv2d_forward(go, g.nodes_[ki].value, geom));
    if (g.needs(ki))
      g.accumulate(ki, conv2d_transpose_backward_kernel(go, g.nodes_[xi].value, g.nodes_[ki].value.shape(), geom));
  });
}

template <class T>
Var Graph<T>::add_channel_bias(Var x, Var bias) {
  const Tensor<T>& xv = value(x);
  const Tensor<T>& bv = value(bias);
  require(xv.rank() == 4 && bv.rank() == 1 && bv.dim(0) == xv.dim(1), ErrorKind::dimension,
          "add_channel_bias: " + shape_string(xv.shape()) + " vs " + shape_string(bv.shape()));
  Tensor<T> out = xv;
  const std::size_t B = xv.dim(0), C = xv.dim(1), HW = xv.dim(2) * xv.dim(3);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c) {
      T* p = out.ptr() + (b * C + c) * HW;
      for (std::size_t i = 0; i < HW; ++i) p[i] += bv[c];
    }
  return push(std::move(out), {x.index, bias.index}, [B, C, HW](Graph& g, std::size_t self) {
    const std::size_t xi = g.nodes_[self].inputs[0], bi = g.nodes_[self].inputs[1];
    const Tensor<T>& go = g.nodes_[self].grad;
    if (g.needs(xi)) g.accumulate(xi, go);
    if (g.needs(bi)) {
      Tensor<T> gb(Shape{C});
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t c = 0; c < C; ++c) {
          const T* p = go.ptr() + (b * C + c) * HW;
          T s = 0;
          for (std::size_t i = 0; i < HW; ++i) s += p[i];
          gb[c] += s;
        }
      g.accumulate(bi, std::move(gb));
    }
  });
}

template <class T>
Var Graph<T>::dense(Var x, Var w, Var b) {
  const Tensor<T>& xv = value(x);
  const Tensor<T>& wv = value(w);
  const Tensor<T>& bv = value(b);
  require(xv.rank() == 2 && wv.rank() == 2 && bv.rank() == 1, ErrorKind::dimension, "dense: expects x[B,n], W[n,m], b[m]");
  require(xv.dim(1) == wv.dim(0) && wv.dim(1) == bv.dim(0), ErrorKind::dimension,
          "dense: " + shape_string(xv.shape()) + " x " + shape_string(wv.shape()) + " + " + shape_string(bv.shape()));
  require_finite(xv, "dense input");
  const std::size_t B = xv.dim(0), n = wv.dim(0), m = wv.dim(1);
  Tensor<T> out(Shape{B, m});
  MapMat<T> o(out.ptr(), B, m);
  o.noalias() = ConstMapMat<T>(xv.ptr(), B, n) * ConstMapMat<T>(wv.ptr(), n, m);
  for (std::size_t r = 0; r < B; ++r)
    for (std::size_t c = 0; c < m; ++c) o(r, c) += bv[c];
  return push(std::move(out), {x.index, w.index, b.index}, [B, n, m](Graph& g, std::size_t self) {
    const auto& in = g.nodes_[self].inputs;
    ConstMapMat<T> go(g.nodes_[self].grad.ptr(), B, m);
    if (g.needs(in[0])) {
      Tensor<T> gx(Shape{B, n});
      MapMat<T>(gx.ptr(), B, n).noalias() = go * ConstMapMat<T>(g.nodes_[in[1]].value.ptr(), n, m).transpose();
      g.accumulate(in[0], std::move(gx));
    }
    if (g.needs(in[1])) {
      Tensor<T> gw(Shape{n, m});
      MapMat<T>(gw.ptr(), n, m).noalias() = ConstMapMat<T>(g.nodes_[in[0]].value.ptr(), B, n).transpose() * go;
      g.accumulate(in[1], std::move(gw));
    }
    if (g.needs(in[2])) {
      Tensor<T> gb(Shape{m});
      for (std::size_t r = 0; r < B; ++r)
        for (std::size_t c = 0; c < m; ++c) gb[c] += go(r, c);
      g.accumulate(in[2], std::move(gb));
    }
  });
}

template <class T>
Var Graph<T>::activation(Var x, Activation kind) {
  const Tensor<T>& xv = value(x);
  require_finite(xv, "activation input");
  Tensor<T> out = xv;
  switch (kind) {
    case Activation::identity: break;
    case Activation::relu:
      for (auto& v : out.data()) v = v > T(0) ? v : T(0);
      break;
    case Activation::sigmoid:
      for (auto& v : out.data()) v = sigmoid(v);
      break;
  }
  return push(std::move(out), {x.index}, [kind](Graph& g, std::size_t self) {
    const std::size_t xi = g.nodes_[self].inputs[0];
    if (!g.needs(xi)) return;
    Tensor<T> gx = g.nodes_[self].grad;
    const Tensor<T>& y = g.nodes_[self].value;
    switch (kind) {
      case Activation::identity: break;
      case Activation::relu:
        // Subgradient at 0 is 0.
        for (std::size_t i = 0; i < gx.size(); ++i)
          if (!(g.nodes_[xi].value[i] > T(0))) gx[i] = T(0);
        break;
      case Activation::sigmoid:
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] *= y[i] * (T(1) - y[i]);
        break;
    }
    g.accumulate(xi, std::move(gx));
  });
}

template <class T>
Var Graph<T>::reshape(Var x, Shape shape) {
  Tensor<T> out = value(x).reshaped(std::move(shape));
  return push(std::move(out), {x.index}, [](Graph& g, std::size_t self) {
    const std::size_t xi = g.nodes_[self].inputs[0];
    if (g.needs(xi)) g.accumulate(xi, g.nodes_[self].grad.reshaped(g.nodes_[xi].value.shape()));
  });
}

template <class T>
Var Graph<T>::add(Var a, Var b) {
  require_same(value(a).shape(), value(b).shape(), "add");
  Tensor<T> out = value(a);
  const Tensor<T>& bv = value(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return push(std::move(out), {a.index, b.index}, [](Graph& g, std::size_t self) {
    for (std::size_t i : g.nodes_[self].inputs)
      if (g.needs(i)) g.accumulate(i, g.nodes_[self].grad);
  });
}

template <class T>
Var Graph<T>::scale(Var x, T factor) {
  Tensor<T> out = value(x);
  for (auto& v : out.data()) v *= factor;
  return push(std::move(out), {x.index}, [factor](Graph& g, std::size_t self) {
    const std::size_t xi = g.nodes_[self].inputs[0];
    if (!g.needs(xi)) return;
    Tensor<T> gx = g.nodes_[self].grad;
    for (auto& v : gx.data()) v *= factor;
    g.accumulate(xi, std::move(gx));
  });
}

template <class T>
Var Graph<T>::sum(Var x) {
  T s = 0;
  for (T v : value(x).data()) s += v;
  return push(scalar(s), {x.index}, [](Graph& g, std::size_t self) {
    const std::size_t xi = g.nodes_[self].inputs[0];
    if (g.needs(xi)) g.accumulate(xi, Tensor<T>(g.nodes_[xi].value.shape(), g.nodes_[self].grad[0]));
  });
}

template <class T>
Var Graph<T>::mean(Var x) {
  return scale(sum(x), T(1) / static_cast<T>(value(x).size()));
}

template <class T>
Var Graph<T>::mse(Var prediction, Var target) {
  const Tensor<T>& p = value(prediction);
  const Tensor<T>& t = value(target);
  require_same(p.shape(), t.shape(), "mse");
  T s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const T d = p[i] - t[i];
    s += d * d;
  }
  const T inv = T(1) / static_cast<T>(p.size());
  return push(scalar(s * inv), {prediction.index, target.index}, [inv](Graph& g, std::size_t self) {
    const std::size_t pi = g.nodes_[self].inputs[0], ti = g.nodes_[self].inputs[1];
    const Tensor<T>& pv = g.nodes_[pi].value;
    const Tensor<T>& tv = g.nodes_[ti].value;
    const T go = g.nodes_[self].grad[0];
    Tensor<T> gp(pv.shape());
    for (std::size_t i = 0; i < gp.size(); ++i) gp[i] = T(2) * inv * go * (pv[i] - tv[i]);
    if (g.needs(ti)) {
      Tensor<T> gt = gp;
      for (auto& v : gt.data()) v = -v;
      g.accumulate(ti, std::move(gt));
    }
    if (g.needs(pi)) g.accumulate(pi, std::move(gp));
  });
}

template <class T>
Var Graph<T>::row_mean_square(Var y) {
  const Tensor<T>& yv = value(y);
  require(yv.rank() == 2, ErrorKind::dimension, "row_mean_square expects [B,N], got " + shape_string(yv.shape()));
  const std::size_t B = yv.dim(0), N = yv.dim(1);
  Tensor<T> out(Shape{B});
  for (std::size_t r = 0; r < B; ++r) {
    T s = 0;
    for (std::size_t j = 0; j < N; ++j) s += yv[r * N + j] * yv[r * N + j];
    out[r] = s / static_cast<T>(N);
  }
  return push(std::move(out), {y.index}, [B, N](Graph& g, std::size_t self) {
    const std::size_t yi = g.nodes_[self].inputs[0];
    if (!g.needs(yi)) return;
    const Tensor<T>& yv = g.nodes_[yi].value;
    Tensor<T> gy(yv.shape());
    for (std::size_t r = 0; r < B; ++r)
      for (std::size_t j = 0; j < N; ++j)
        gy[r * N + j] = g.nodes_[self].grad[r] * T(2) * yv[r * N + j] / static_cast<T>(N);
    g.accumulate(yi, std::move(gy));
  });
}

template <class T>
Var Graph<T>::normalize_rows(Var y, RowNorm mode, T guard) {
  const Tensor<T>& yv = value(y);
  require(yv.rank() == 2, ErrorKind::dimension, "normalize_rows expects [B,N], got " + shape_string(yv.shape()));
  const std::size_t B = yv.dim(0), N = yv.dim(1);
  // Per-row divisor: mean square or Euclidean norm.
  std::vector<T> div(B);
  Tensor<T> out = yv;
  for (std::size_t r = 0; r < B; ++r) {
    T s = 0;
    for (std::size_t j = 0; j < N; ++j) s += yv[r * N + j] * yv[r * N + j];
    const T ms = s / static_cast<T>(N);
    if (!(ms > guard))
      fail(ErrorKind::numeric, "latent row " + std::to_string(r) + " has mean square " + std::to_string(ms) +
                                   " at or below the normalization guard");
    div[r] = mode == RowNorm::mean_square ? ms : std::sqrt(s);
    for (std::size_t j = 0; j < N; ++j) out[r * N + j] /= div[r];
  }
  return push(std::move(out), {y.index}, [B, N, mode, div](Graph& g, std::size_t self) {
    const std::size_t yi = g.nodes_[self].inputs[0];
    if (!g.needs(yi)) return;
    const Tensor<T>& yv = g.nodes_[yi].value;
    const Tensor<T>& go = g.nodes_[self].grad;
    Tensor<T> gy(yv.shape());
    for (std::size_t r = 0; r < B; ++r) {
      T dot = 0;
      for (std::size_t j = 0; j < N; ++j) dot += go[r * N + j] * yv[r * N + j];
      const T d = div[r];
      // mean_square: d(y/m)/dy = I/m - y (2y/N)^T / m^2
      // unit_ball:   d(y/n)/dy = I/n - y y^T / n^3
      const T coef = mode == RowNorm::mean_square ? T(2) * dot / (static_cast<T>(N) * d * d) : dot / (d * d * d);
      for (std::size_t j = 0; j < N; ++j) gy[r * N + j] = go[r * N + j] / d - coef * yv[r * N + j];
    }
    g.accumulate(yi, std::move(gy));
  });
}

template <class T>
void Graph<T>::backward(Var loss) {
  require(loss.index < nodes_.size(), ErrorKind::contract, "backward: variable does not belong to this graph");
  require(nodes_[loss.index].value.size() == 1, ErrorKind::contract,
          "backward requires a scalar loss, got shape " + shape_string(nodes_[loss.index].value.shape()));
  for (auto& n : nodes_) n.grad = Tensor<T>();

  std::vector<char> reachable(nodes_.size(), 0);
  reachable[loss.index] = 1;
  for (std::size_t i = loss.index + 1; i-- > 0;) {
    if (!reachable[i]) continue;
    for (std::size_t in : nodes_[i].inputs) reachable[in] = 1;
  }

  nodes_[loss.index].grad = Tensor<T>(nodes_[loss.index].value.shape(), T(1));
  for (std::size_t i = loss.index + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!reachable[i] || n.grad.empty()) continue;
    if (n.backward && n.needs_grad) n.backward(*this, i);
    if (n.param) {
      Tensor<T>& pg = n.param->grad();
      for (std::size_t k = 0; k < pg.size(); ++k) pg[k] += n.grad[k];
    }
  }
}

template class Graph<float>;
template class Graph<double>;

}  // namespace pf
