#pragma once

// Independent reference implementations used only by tests. Nothing here calls
// into the optimized code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <limits>

#include "pf/autodiff.hpp"
#include "pf/cluster.hpp"

namespace pf::oracle {

inline Tensor<double> random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

inline double dot(const Tensor<double>& a, const Tensor<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Six nested loops straight from the definition of a zero-padded correlation.
inline Tensor<double> conv2d(const Tensor<double>& x, const Tensor<double>& k, std::size_t stride, const Padding& pad) {
  const long B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const long F = k.dim(0), kh = k.dim(2), kw = k.dim(3);
  const long Ho = (H + pad.top + pad.bottom - kh) / stride + 1;
  const long Wo = (W + pad.left + pad.right - kw) / stride + 1;
  Tensor<double> y(Shape{std::size_t(B), std::size_t(F), std::size_t(Ho), std::size_t(Wo)});
  for (long b = 0; b < B; ++b)
    for (long f = 0; f < F; ++f)
      for (long oy = 0; oy < Ho; ++oy)
        for (long ox = 0; ox < Wo; ++ox) {
          double s = 0;
          for (long c = 0; c < C; ++c)
            for (long i = 0; i < kh; ++i)
              for (long j = 0; j < kw; ++j) {
                const long iy = oy * long(stride) + i - long(pad.top);
                const long ix = ox * long(stride) + j - long(pad.left);
                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                s += x.at(b, c, iy, ix) * k.at(f, c, i, j);
              }
          y.at(b, f, oy, ox) = s;
        }
  return y;
}

// Each input pixel stamps a scaled copy of the kernel into the output.
inline Tensor<double> conv2d_transpose(const Tensor<double>& x, const Tensor<double>& k, std::size_t stride,
                                       const Padding& pad, std::size_t out_h, std::size_t out_w) {
  const long B = x.dim(0), F = x.dim(1), H = x.dim(2), W = x.dim(3);
  const long C = k.dim(1), kh = k.dim(2), kw = k.dim(3);
  Tensor<double> y(Shape{std::size_t(B), std::size_t(C), out_h, out_w});
  for (long b = 0; b < B; ++b)
    for (long f = 0; f < F; ++f)
      for (long iy = 0; iy < H; ++iy)
        for (long ix = 0; ix < W; ++ix)
          for (long c = 0; c < C; ++c)
            for (long i = 0; i < kh; ++i)
              for (long j = 0; j < kw; ++j) {
                const long oy = iy * long(stride) + i - long(pad.top);
                const long ox = ix * long(stride) + j - long(pad.left);
                if (oy < 0 || oy >= long(out_h) || ox < 0 || ox >= long(out_w)) continue;
                y.at(b, c, oy, ox) += x.at(b, f, iy, ix) * k.at(f, c, i, j);
              }
  return y;
}

inline Tensor<double> matmul(const Tensor<double>& a, const Tensor<double>& b) {
  const std::size_t n = a.dim(0), k = a.dim(1), m = b.dim(1);
  Tensor<double> c(Shape{n, m});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0;
      for (std::size_t t = 0; t < k; ++t) s += a[i * k + t] * b[t * m + j];
      c[i * m + j] = s;
    }
  return c;
}

/// Builds a scalar loss from a fresh graph over the given parameters.
using LossBuilder = std::function<Var(Graph<double>&, std::vector<Var>&)>;

/// Largest per-parameter relative error ||analytic - numeric|| / max(||analytic||, ||numeric||)
/// with central differences of step h.
inline double gradient_check(std::vector<Parameter<double>*> params, const LossBuilder& build, double h = 1e-5) {
  auto eval = [&]() {
    Graph<double> g;
    std::vector<Var> vars;
    for (auto* p : params) vars.push_back(g.param(*p));
    Var loss = build(g, vars);
    return g.value(loss)[0];
  };
  for (auto* p : params) p->zero_grad();
  {
    Graph<double> g;
    std::vector<Var> vars;
    for (auto* p : params) vars.push_back(g.param(*p));
    g.backward(build(g, vars));
  }
  double worst = 0;
  for (auto* p : params) {
    double diff2 = 0, a2 = 0, n2 = 0;
    for (std::size_t i = 0; i < p->value().size(); ++i) {
      const double orig = p->value()[i];
      p->value()[i] = orig + h;
      const double up = eval();
      p->value()[i] = orig - h;
      const double down = eval();
      p->value()[i] = orig;
      const double numeric = (up - down) / (2 * h);
      const double analytic = p->grad()[i];
      diff2 += (analytic - numeric) * (analytic - numeric);
      a2 += analytic * analytic;
      n2 += numeric * numeric;
    }
    const double denom = std::max({std::sqrt(a2), std::sqrt(n2), 1e-12});
    worst = std::max(worst, std::sqrt(diff2) / denom);
  }
  return worst;
}

// Sum of squared distances to the cluster means.
inline double sse(const LatentMatrix& x, const std::vector<int>& labels, int k) {
  const std::size_t M = x.dim(0), N = x.dim(1);
  std::vector<double> c(k * N, 0.0), cnt(k, 0.0);
  for (std::size_t i = 0; i < M; ++i) {
    cnt[labels[i]] += 1;
    for (std::size_t d = 0; d < N; ++d) c[labels[i] * N + d] += x[i * N + d];
  }
  double s = 0;
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t d = 0; d < N; ++d) {
      const double v = x[i * N + d] - c[labels[i] * N + d] / cnt[labels[i]];
      s += v * v;
    }
  return s;
}

// Recomputes every cluster distance from the member points at every step.
inline std::vector<Merge> naive_merges(const LatentMatrix& x, int k, Linkage link) {
  const std::size_t M = x.dim(0), N = x.dim(1);
  auto dist = [&](std::size_t i, std::size_t j) {
    double s = 0;
    for (std::size_t d = 0; d < N; ++d) s += (x[i * N + d] - x[j * N + d]) * (x[i * N + d] - x[j * N + d]);
    return std::sqrt(s);
  };
  std::vector<std::vector<std::size_t>> clusters(M);
  for (std::size_t i = 0; i < M; ++i) clusters[i] = {i};
  std::vector<Merge> out;
  while (clusters.size() > static_cast<std::size_t>(k)) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t ba = 0, bb = 0;
    for (std::size_t a = 0; a < clusters.size(); ++a)
      for (std::size_t b = a + 1; b < clusters.size(); ++b) {
        double d = link == Linkage::single ? std::numeric_limits<double>::infinity() : 0.0;
        for (auto i : clusters[a])
          for (auto j : clusters[b]) {
            const double v = dist(i, j);
            if (link == Linkage::single) d = std::min(d, v);
            else if (link == Linkage::complete) d = std::max(d, v);
            else if (link == Linkage::average) d += v;
          }
        if (link == Linkage::average) d /= static_cast<double>(clusters[a].size() * clusters[b].size());
        if (link == Linkage::ward) {
          const double na = static_cast<double>(clusters[a].size()), nb = static_cast<double>(clusters[b].size());
          double c2 = 0;
          for (std::size_t t = 0; t < N; ++t) {
            double ca = 0, cb = 0;
            for (auto i : clusters[a]) ca += x[i * N + t] / na;
            for (auto j : clusters[b]) cb += x[j * N + t] / nb;
            c2 += (ca - cb) * (ca - cb);
          }
          d = std::sqrt(2 * na * nb / (na + nb) * c2);
        }
        if (d < best) best = d, ba = a, bb = b;
      }
    // clusters stay sorted by smallest member, so ba's name < bb's name
    out.push_back({static_cast<int>(clusters[ba].front()), static_cast<int>(clusters[bb].front()), best});
    clusters[ba].insert(clusters[ba].end(), clusters[bb].begin(), clusters[bb].end());
    std::sort(clusters[ba].begin(), clusters[ba].end());
    clusters.erase(clusters.begin() + static_cast<long>(bb));
  }
  return out;
}

// Straight-line metrics, written independently of the library.
struct Plain {
  double acc, p, r, f1;
};
inline Plain plain_metrics(const std::vector<std::vector<long>>& c) {
  const std::size_t k = c.size();
  double tp = 0, total = 0, p = 0, r = 0, f1 = 0;
  for (std::size_t i = 0; i < k; ++i) {
    double row = 0, col = 0;
    for (std::size_t j = 0; j < k; ++j) row += c[i][j], col += c[j][i], total += c[i][j];
    tp += c[i][i];
    const double pi = col > 0 ? c[i][i] / col : 0.0, ri = row > 0 ? c[i][i] / row : 0.0;
    p += pi;
    r += ri;
    f1 += pi + ri > 0 ? 2 * pi * ri / (pi + ri) : 0.0;
  }
  return {tp / total, p / k, r / k, f1 / k};
}

}  // namespace pf::oracle
