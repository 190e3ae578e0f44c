#include "pf/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace pf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_points(const LatentMatrix& p, int k, const char* who) {
  require(p.rank() == 2, ErrorKind::dimension, std::string(who) + ": points must be [M,N], got " + shape_string(p.shape()));
  require(k >= 1, ErrorKind::config, std::string(who) + ": k must be >= 1");
  require(static_cast<std::size_t>(k) <= p.dim(0), ErrorKind::config,
          std::string(who) + ": k = " + std::to_string(k) + " exceeds the number of points " + std::to_string(p.dim(0)));
  require_finite(p, who);
}

double sq_dist(const double* a, const double* b, std::size_t n) {
  double s = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// Full Euclidean distance matrix, row-major M x M.
std::vector<double> distance_matrix(const LatentMatrix& p) {
  const std::size_t M = p.dim(0), N = p.dim(1);
  std::vector<double> d(M * M, 0.0);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = i + 1; j < M; ++j) d[i * M + j] = d[j * M + i] = std::sqrt(sq_dist(p.ptr() + i * N, p.ptr() + j * N, N));
  return d;
}

// Lance-Williams merging on a precomputed distance matrix. Returns merges and the
// final cluster membership (representative index per point).
Dendrogram lance_williams(std::vector<double> d, std::size_t M, std::size_t k, Linkage linkage,
                          const std::vector<double>& weights, std::vector<int>* rep_out) {
  std::vector<bool> active(M, true);
  std::vector<double> size(weights);
  std::vector<int> rep(M);
  std::iota(rep.begin(), rep.end(), 0);
  Dendrogram dg;
  dg.leaves = static_cast<int>(M);
  for (std::size_t clusters = M; clusters > k; --clusters) {
    std::size_t ba = 0, bb = 0;
    double best = kInf;
    for (std::size_t i = 0; i < M; ++i) {
      if (!active[i]) continue;
      const double* row = d.data() + i * M;
      for (std::size_t j = i + 1; j < M; ++j)
        if (active[j] && row[j] < best) best = row[j], ba = i, bb = j;
    }
    dg.merges.push_back({static_cast<int>(ba), static_cast<int>(bb), best});
    for (std::size_t x = 0; x < M; ++x) {
      if (!active[x] || x == ba || x == bb) continue;
      const double da = d[ba * M + x], db = d[bb * M + x];
      double nd = 0;
      switch (linkage) {
        case Linkage::single: nd = std::min(da, db); break;
        case Linkage::complete: nd = std::max(da, db); break;
        case Linkage::average: nd = (size[ba] * da + size[bb] * db) / (size[ba] + size[bb]); break;
        case Linkage::ward: {
          const double dab = d[ba * M + bb];
          const double na = size[ba], nb = size[bb], nx = size[x];
          nd = std::sqrt(std::max(0.0, ((na + nx) * da * da + (nb + nx) * db * db - nx * dab * dab) / (na + nb + nx)));
          break;
        }
      }
      d[ba * M + x] = d[x * M + ba] = nd;
    }
    size[ba] += size[bb];
    active[bb] = false;
    for (auto& r : rep)
      if (r == static_cast<int>(bb)) r = static_cast<int>(ba);
  }
  if (rep_out) *rep_out = std::move(rep);
  return dg;
}

// Representative indices -> labels 0..k-1 in order of first appearance.
std::vector<int> compact_labels(const std::vector<int>& rep) {
  std::vector<int> map(rep.size(), -1), labels(rep.size());
  int next = 0;
  for (std::size_t i = 0; i < rep.size(); ++i) {
    int& m = map[static_cast<std::size_t>(rep[i])];
    if (m < 0) m = next++;
    labels[i] = m;
  }
  return labels;
}

// Minimum-cost assignment on a square cost matrix (Hungarian method with
// potentials). Returns col_of_row.
std::vector<int> hungarian_min(const std::vector<std::vector<long long>>& cost) {
  const std::size_t n = cost.size();
  const long long INF = std::numeric_limits<long long>::max() / 4;
  std::vector<long long> u(n + 1), v(n + 1);
  std::vector<std::size_t> p(n + 1), way(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<long long> minv(n + 1, INF);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      long long delta = INF;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const long long cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) minv[j] = cur, way[j] = j0;
        if (minv[j] < delta) delta = minv[j], j1 = j;
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> col(n);
  for (std::size_t j = 1; j <= n; ++j) col[p[j] - 1] = static_cast<int>(j - 1);
  return col;
}

long total_weight(const std::vector<std::vector<long>>& w, const std::vector<int>& p) {
  long s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) s += w[i][static_cast<std::size_t>(p[i])];
  return s;
}

}  // namespace

void ClusterAssignment::validate() const {
  require(k >= 1, ErrorKind::contract, "assignment k must be >= 1");
  for (std::size_t i = 0; i < labels.size(); ++i)
    require(labels[i] >= 0 && labels[i] < k, ErrorKind::data,
            "sample " + std::to_string(i) + " has label " + std::to_string(labels[i]) + " outside [0," +
                std::to_string(k) + ")");
}

double unit_uniform(std::uint64_t bits) noexcept { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

LatentMatrix standardize(const LatentMatrix& points) {
  require(points.rank() == 2, ErrorKind::dimension, "standardize expects [M,N]");
  const std::size_t M = points.dim(0), N = points.dim(1);
  LatentMatrix out = points;
  for (std::size_t j = 0; j < N; ++j) {
    double mean = 0;
    for (std::size_t i = 0; i < M; ++i) mean += points[i * N + j];
    mean /= static_cast<double>(M);
    double var = 0;
    for (std::size_t i = 0; i < M; ++i) var += (points[i * N + j] - mean) * (points[i * N + j] - mean);
    const double sd = std::sqrt(var / static_cast<double>(M));
    for (std::size_t i = 0; i < M; ++i) out[i * N + j] = sd > 0 ? (points[i * N + j] - mean) / sd : 0.0;
  }
  return out;
}

ClusterAssignment kmeans(const LatentMatrix& points, int k, std::uint64_t seed, const KmeansOptions& opt,
                         std::vector<double>* history) {
  check_points(points, k, "kmeans");
  require(opt.max_iter >= 1, ErrorKind::config, "kmeans: max_iter must be >= 1");
  const std::size_t M = points.dim(0), N = points.dim(1), K = static_cast<std::size_t>(k);
  const double* P = points.ptr();
  std::mt19937_64 rng(seed);

  // k-means++ seeding.
  std::vector<double> centers(K * N);
  std::vector<double> d2(M, kInf);
  std::size_t first = rng() % M;
  std::copy_n(P + first * N, N, centers.begin());
  for (std::size_t c = 1; c < K; ++c) {
    double total = 0;
    for (std::size_t i = 0; i < M; ++i) {
      d2[i] = std::min(d2[i], sq_dist(P + i * N, centers.data() + (c - 1) * N, N));
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total > 0) {
      double r = unit_uniform(rng()) * total;
      pick = M - 1;
      for (std::size_t i = 0; i < M; ++i) {
        if (d2[i] > 0 && r < d2[i]) {
          pick = i;
          break;
        }
        r -= d2[i];
      }
      while (d2[pick] == 0) --pick;  // rounding at the tail
    } else {
      pick = rng() % M;
    }
    std::copy_n(P + pick * N, N, centers.begin() + static_cast<long>(c * N));
  }

  std::vector<int> labels(M, -1);
  std::vector<double> dist(M);
  double objective = 0;
  int iter = 0;
  auto assign = [&] {
    bool changed = false;
    for (std::size_t i = 0; i < M; ++i) {
      int best = 0;
      double bd = kInf;
      for (std::size_t c = 0; c < K; ++c) {
        const double d = sq_dist(P + i * N, centers.data() + c * N, N);
        if (d < bd) bd = d, best = static_cast<int>(c);
      }
      if (labels[i] != best) changed = true;
      labels[i] = best;
      dist[i] = bd;
    }
    return changed;
  };
  auto update = [&] {
    std::vector<std::size_t> count(K, 0);
    std::fill(centers.begin(), centers.end(), 0.0);
    for (std::size_t i = 0; i < M; ++i) {
      const std::size_t c = static_cast<std::size_t>(labels[i]);
      ++count[c];
      for (std::size_t j = 0; j < N; ++j) centers[c * N + j] += P[i * N + j];
    }
    for (std::size_t c = 0; c < K; ++c) {
      if (count[c] == 0) {
        // Reseed with the point farthest from its centroid, taken from a cluster of size > 1.
        std::size_t far = M;
        double fd = -1;
        for (std::size_t i = 0; i < M; ++i)
          if (count[static_cast<std::size_t>(labels[i])] > 1 && dist[i] > fd) fd = dist[i], far = i;
        const std::size_t old = static_cast<std::size_t>(labels[far]);
        --count[old];
        for (std::size_t j = 0; j < N; ++j) centers[old * N + j] -= P[far * N + j];
        labels[far] = static_cast<int>(c);
        dist[far] = 0;
        count[c] = 1;
        for (std::size_t j = 0; j < N; ++j) centers[c * N + j] = P[far * N + j];
      }
    }
    for (std::size_t c = 0; c < K; ++c)
      for (std::size_t j = 0; j < N; ++j) centers[c * N + j] /= static_cast<double>(count[c]);
  };
  auto sse = [&] {
    double s = 0;
    for (std::size_t i = 0; i < M; ++i) s += sq_dist(P + i * N, centers.data() + static_cast<std::size_t>(labels[i]) * N, N);
    return s;
  };

  assign();
  while (true) {
    ++iter;
    update();
    objective = sse();
    if (history) history->push_back(objective);
    if (iter >= opt.max_iter) break;
    if (!assign()) break;
  }
  ClusterAssignment a;
  a.labels = std::move(labels);
  a.k = k;
  a.clusterer = "kmeans";
  a.objective = objective;
  a.params = {{"seed", seed}, {"max_iter", opt.max_iter}, {"iterations", iter}, {"init", "k-means++"}};
  return a;
}

Linkage parse_linkage(std::string_view name) {
  if (name == "single") return Linkage::single;
  if (name == "complete") return Linkage::complete;
  if (name == "average") return Linkage::average;
  if (name == "ward") return Linkage::ward;
  fail(ErrorKind::config, "unknown linkage '" + std::string(name) + "'");
}

const char* to_string(Linkage l) noexcept {
  switch (l) {
    case Linkage::single: return "single";
    case Linkage::complete: return "complete";
    case Linkage::average: return "average";
    case Linkage::ward: return "ward";
  }
  return "?";
}

Dendrogram agglomerative_merges(const LatentMatrix& points, int k, Linkage linkage) {
  check_points(points, k, "agglomerative");
  const std::size_t M = points.dim(0);
  return lance_williams(distance_matrix(points), M, static_cast<std::size_t>(k), linkage, std::vector<double>(M, 1.0),
                        nullptr);
}

ClusterAssignment agglomerative(const LatentMatrix& points, int k, Linkage linkage) {
  check_points(points, k, "agglomerative");
  const std::size_t M = points.dim(0);
  std::vector<int> rep;
  const Dendrogram dg = lance_williams(distance_matrix(points), M, static_cast<std::size_t>(k), linkage,
                                       std::vector<double>(M, 1.0), &rep);
  ClusterAssignment a;
  a.labels = compact_labels(rep);
  a.k = k;
  a.clusterer = "agg";
  a.objective = dg.merges.empty() ? 0.0 : dg.merges.back().distance;
  a.params = {{"linkage", to_string(linkage)}};
  return a;
}

CF CF::of_point(const double* x, std::size_t dim) {
  CF c(dim);
  c.n = 1;
  for (std::size_t i = 0; i < dim; ++i) {
    c.ls[i] = x[i];
    c.ss += x[i] * x[i];
  }
  return c;
}

void CF::add(const CF& o) {
  n += o.n;
  for (std::size_t i = 0; i < ls.size(); ++i) ls[i] += o.ls[i];
  ss += o.ss;
}

std::vector<double> CF::centroid() const {
  std::vector<double> c(ls);
  for (double& v : c) v /= static_cast<double>(n);
  return c;
}

double CF::radius() const {
  if (n == 0) return 0;
  double c2 = 0;
  for (double v : ls) c2 += (v / static_cast<double>(n)) * (v / static_cast<double>(n));
  return std::sqrt(std::max(0.0, ss / static_cast<double>(n) - c2));
}

namespace {

double centroid_sq_dist(const CF& a, const CF& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.ls.size(); ++i) {
    const double d = a.ls[i] / static_cast<double>(a.n) - b.ls[i] / static_cast<double>(b.n);
    s += d * d;
  }
  return s;
}

CF sum_of(const std::vector<CF>& entries, std::size_t dim) {
  CF s(dim);
  for (const auto& e : entries) s.add(e);
  return s;
}

std::size_t closest_entry(const std::vector<CF>& entries, const CF& x) {
  std::size_t best = 0;
  double bd = kInf;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const double d = centroid_sq_dist(entries[i], x);
    if (d < bd) bd = d, best = i;
  }
  return best;
}

using Node = CFTree::Node;

// Splits an overflowing node in place; returns the new sibling.
std::unique_ptr<Node> split_node(Node& node) {
  const std::size_t n = node.entries.size();
  std::size_t sa = 0, sb = 1;
  double far = -1;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = centroid_sq_dist(node.entries[i], node.entries[j]);
      if (d > far) far = d, sa = i, sb = j;
    }
  auto sibling = std::make_unique<Node>();
  sibling->leaf = node.leaf;
  Node kept;
  kept.leaf = node.leaf;
  const CF seed_a = node.entries[sa], seed_b = node.entries[sb];
  for (std::size_t i = 0; i < n; ++i) {
    const bool to_b = i == sb || (i != sa && centroid_sq_dist(node.entries[i], seed_b) < centroid_sq_dist(node.entries[i], seed_a));
    Node& dst = to_b ? *sibling : kept;
    dst.entries.push_back(std::move(node.entries[i]));
    if (!node.leaf) dst.children.push_back(std::move(node.children[i]));
  }
  node = std::move(kept);
  return sibling;
}

}  // namespace

CFTree::CFTree(std::size_t dim, double threshold, int branching)
    : dim_(dim), threshold_(threshold), branching_(static_cast<std::size_t>(branching)), root_(std::make_unique<Node>()) {
  require(std::isfinite(threshold) && threshold > 0, ErrorKind::config, "BIRCH threshold must be > 0");
  require(branching >= 2, ErrorKind::config, "BIRCH branching factor must be >= 2");
  require(dim >= 1, ErrorKind::config, "CF tree dimension must be >= 1");
}

void CFTree::insert(const double* x) {
  const CF point = CF::of_point(x, dim_);
  // Descend to the closest leaf, remembering the path.
  std::vector<std::pair<Node*, std::size_t>> path;
  Node* node = root_.get();
  while (!node->leaf) {
    const std::size_t i = closest_entry(node->entries, point);
    path.emplace_back(node, i);
    node = node->children[i].get();
  }
  bool absorbed = false;
  if (!node->entries.empty()) {
    const std::size_t i = closest_entry(node->entries, point);
    CF merged = node->entries[i];
    merged.add(point);
    if (merged.radius() <= threshold_) {
      node->entries[i] = std::move(merged);
      absorbed = true;
    }
  }
  if (!absorbed) node->entries.push_back(point);
  ++points_;

  // Walk back up: resummarize children, splitting any node that overflowed.
  std::unique_ptr<Node> split = node->entries.size() > branching_ ? split_node(*node) : nullptr;
  for (auto it = path.rbegin(); it != path.rend(); ++it) {
    Node* parent = it->first;
    const std::size_t i = it->second;
    parent->entries[i] = sum_of(parent->children[i]->entries, dim_);
    if (split) {
      parent->entries.insert(parent->entries.begin() + static_cast<long>(i) + 1, sum_of(split->entries, dim_));
      parent->children.insert(parent->children.begin() + static_cast<long>(i) + 1, std::move(split));
      split = nullptr;
    }
    if (parent->entries.size() > branching_) split = split_node(*parent);
  }
  if (split) {
    auto root = std::make_unique<Node>();
    root->leaf = false;
    root->entries.push_back(sum_of(root_->entries, dim_));
    root->entries.push_back(sum_of(split->entries, dim_));
    root->children.push_back(std::move(root_));
    root->children.push_back(std::move(split));
    root_ = std::move(root);
  }
}

int CFTree::height() const {
  int h = 1;
  for (const Node* n = root_.get(); !n->leaf; n = n->children.front().get()) ++h;
  return h;
}

std::vector<CF> CFTree::leaf_entries() const {
  std::vector<CF> out;
  std::vector<const Node*> stack{root_.get()};
  // Depth-first, left to right.
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    if (n->leaf) {
      out.insert(out.end(), n->entries.begin(), n->entries.end());
    } else {
      for (auto it = n->children.rbegin(); it != n->children.rend(); ++it) stack.push_back(it->get());
    }
  }
  return out;
}

double default_birch_threshold(const LatentMatrix& points, double fraction) {
  require(points.rank() == 2 && points.dim(0) >= 2, ErrorKind::data, "BIRCH needs at least two points");
  const std::size_t M = points.dim(0), N = points.dim(1), S = std::min<std::size_t>(M, 100);
  std::vector<std::size_t> idx(S);
  for (std::size_t i = 0; i < S; ++i) idx[i] = i * M / S;
  std::vector<double> d;
  for (std::size_t i = 0; i < S; ++i)
    for (std::size_t j = i + 1; j < S; ++j) d.push_back(std::sqrt(sq_dist(points.ptr() + idx[i] * N, points.ptr() + idx[j] * N, N)));
  std::sort(d.begin(), d.end());
  const double median = d.size() % 2 ? d[d.size() / 2] : 0.5 * (d[d.size() / 2 - 1] + d[d.size() / 2]);
  require(median > 0, ErrorKind::numeric, "BIRCH: sampled points are all identical; cannot derive a threshold");
  return fraction * median;
}

ClusterAssignment birch(const LatentMatrix& points, int k, double threshold, int branching, Linkage global) {
  check_points(points, k, "birch");
  require(std::isfinite(threshold), ErrorKind::config, "BIRCH threshold must be finite");
  const bool auto_threshold = threshold <= 0;
  if (auto_threshold) threshold = default_birch_threshold(points);
  const std::size_t M = points.dim(0), N = points.dim(1), K = static_cast<std::size_t>(k);

  CFTree tree(N, threshold, branching);
  for (std::size_t i = 0; i < M; ++i) tree.insert(points.ptr() + i * N);
  const std::vector<CF> entries = tree.leaf_entries();
  require(entries.size() >= K, ErrorKind::config,
          "BIRCH: only " + std::to_string(entries.size()) + " leaf entries for k = " + std::to_string(k) +
              "; lower the threshold");

  // Phase 2: agglomeration of the leaf-entry centroids. Ward weighs each entry by
  // its member count, so the merge costs are those of the underlying points.
  const std::size_t E = entries.size();
  LatentMatrix cent(Shape{E, N});
  for (std::size_t e = 0; e < E; ++e) {
    const auto c = entries[e].centroid();
    std::copy(c.begin(), c.end(), cent.ptr() + e * N);
  }
  std::vector<double> d = distance_matrix(cent), weight(E, 1.0);
  if (global == Linkage::ward) {
    for (std::size_t e = 0; e < E; ++e) weight[e] = static_cast<double>(entries[e].n);
    for (std::size_t i = 0; i < E; ++i)
      for (std::size_t j = 0; j < E; ++j)
        if (i != j) d[i * E + j] *= std::sqrt(2 * weight[i] * weight[j] / (weight[i] + weight[j]));
  }
  std::vector<int> rep;
  lance_williams(std::move(d), E, K, global, weight, &rep);
  const std::vector<int> group = compact_labels(rep);
  std::vector<CF> clusters(K, CF(N));
  for (std::size_t e = 0; e < entries.size(); ++e) clusters[static_cast<std::size_t>(group[e])].add(entries[e]);
  std::vector<double> centers(K * N);
  for (std::size_t c = 0; c < K; ++c) {
    const auto v = clusters[c].centroid();
    std::copy(v.begin(), v.end(), centers.begin() + static_cast<long>(c * N));
  }

  // Phase 3: nearest centroid.
  ClusterAssignment a;
  a.labels.resize(M);
  double sse = 0;
  for (std::size_t i = 0; i < M; ++i) {
    int best = 0;
    double bd = kInf;
    for (std::size_t c = 0; c < K; ++c) {
      const double d = sq_dist(points.ptr() + i * N, centers.data() + c * N, N);
      if (d < bd) bd = d, best = static_cast<int>(c);
    }
    a.labels[i] = best;
    sse += bd;
  }
  a.k = k;
  a.clusterer = "birch";
  a.objective = sse;
  a.params = {{"threshold", threshold},
              {"threshold_rule", auto_threshold ? "0.25 * median pairwise distance (100-row sample)" : "user"},
              {"branching", branching},
              {"global_linkage", to_string(global)},
              {"leaf_entries", entries.size()},
              {"tree_height", tree.height()}};
  return a;
}

std::vector<std::vector<long>> contingency(const std::vector<int>& a, int ka, const std::vector<int>& b, int kb) {
  require(a.size() == b.size(), ErrorKind::dimension,
          "contingency: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + " samples");
  std::vector<std::vector<long>> t(static_cast<std::size_t>(ka), std::vector<long>(static_cast<std::size_t>(kb), 0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    require(a[i] >= 0 && a[i] < ka && b[i] >= 0 && b[i] < kb, ErrorKind::data,
            "contingency: label out of range at sample " + std::to_string(i));
    ++t[static_cast<std::size_t>(a[i])][static_cast<std::size_t>(b[i])];
  }
  return t;
}

std::vector<int> max_weight_permutation(const std::vector<std::vector<long>>& w) {
  const std::size_t n = w.size();
  for (const auto& row : w) require(row.size() == n, ErrorKind::dimension, "weight matrix must be square");
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  if (n <= 8) {
    // Lexicographic enumeration; the first maximum is the smallest permutation.
    std::vector<int> best = p;
    long best_w = total_weight(w, p);
    while (std::next_permutation(p.begin(), p.end())) {
      const long s = total_weight(w, p);
      if (s > best_w) best_w = s, best = p;
    }
    return best;
  }
  long long maxw = 0;
  for (const auto& row : w)
    for (long v : row) maxw = std::max<long long>(maxw, v);
  const long long forbid = (maxw + 1) * static_cast<long long>(n) * 4 + 1;
  std::vector<int> fixed(n, -1);
  auto solve = [&] {
    std::vector<std::vector<long long>> cost(n, std::vector<long long>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const bool ok = fixed[i] < 0 ? std::find(fixed.begin(), fixed.end(), static_cast<int>(j)) == fixed.end()
                                      : fixed[i] == static_cast<int>(j);
        cost[i][j] = ok ? maxw - w[i][j] : forbid;
      }
    const auto col = hungarian_min(cost);
    for (std::size_t i = 0; i < n; ++i)
      if (cost[i][static_cast<std::size_t>(col[i])] >= forbid) return std::pair{col, std::numeric_limits<long>::min()};
    return std::pair{col, total_weight(w, col)};
  };
  const long optimum = solve().second;
  // Fix rows one at a time to the smallest column that keeps the optimum.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (std::find(fixed.begin(), fixed.end(), static_cast<int>(j)) != fixed.end()) continue;
      fixed[i] = static_cast<int>(j);
      if (solve().second == optimum) break;
      fixed[i] = -1;
    }
  return fixed;
}

}  // namespace pf
