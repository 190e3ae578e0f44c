#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pf/tensor.hpp"

namespace pf {

/// Feature rows [M,N], one per sample.
using LatentMatrix = Tensor<double>;

struct ClusterAssignment {
  std::vector<int> labels;  // per sample, in [0, k)
  int k = 0;
  std::string clusterer;
  double objective = 0;  // clusterer-specific, see each function
  nlohmann::json params = nlohmann::json::object();

  std::size_t size() const noexcept { return labels.size(); }
  void validate() const;
};

/// Uniform double in [0,1) from 53 high bits of a 64-bit draw; portable across
/// standard libraries, unlike std::uniform_real_distribution.
double unit_uniform(std::uint64_t bits) noexcept;

/// Column-wise z-score. Constant columns become 0.
LatentMatrix standardize(const LatentMatrix& points);

struct KmeansOptions {
  int max_iter = 300;
};

/// k-means++ seeding then Lloyd iterations until no assignment changes or
/// max_iter. Empty clusters are reseeded with the point farthest from its
/// centroid. Objective: sum of squared distances to the assigned centroid.
/// `history`, when given, receives the objective after every iteration.
ClusterAssignment kmeans(const LatentMatrix& points, int k, std::uint64_t seed, const KmeansOptions& opt = {},
                         std::vector<double>* history = nullptr);

/// ward: sqrt(2 |A||B| / (|A|+|B|)) * ||mean(A) - mean(B)||, so singletons merge at
/// their Euclidean distance.
enum class Linkage { single, complete, average, ward };
Linkage parse_linkage(std::string_view name);
const char* to_string(Linkage l) noexcept;

/// One merge. Clusters are named by their smallest member index, so a < b and the
/// merged cluster is named a.
struct Merge {
  int a = 0;
  int b = 0;
  double distance = 0;
};

struct Dendrogram {
  int leaves = 0;
  std::vector<Merge> merges;
};

/// Bottom-up merging of the closest pair (Euclidean distance, Lance-Williams
/// updates) until `k` clusters remain. Ties go to the lexicographically smallest
/// (a, b).
Dendrogram agglomerative_merges(const LatentMatrix& points, int k, Linkage linkage);

/// Labels clusters 0..k-1 in order of their smallest member. Objective: distance
/// of the last merge (0 when k == M).
ClusterAssignment agglomerative(const LatentMatrix& points, int k, Linkage linkage = Linkage::ward);

/// Clustering feature: count, linear sum, squared sum.
struct CF {
  std::size_t n = 0;
  std::vector<double> ls;
  double ss = 0;

  explicit CF(std::size_t dim = 0) : ls(dim, 0.0) {}
  static CF of_point(const double* x, std::size_t dim);
  void add(const CF& other);
  std::vector<double> centroid() const;
  /// Root mean squared distance of the members to the centroid.
  double radius() const;
};

/// Height-balanced CF tree. A point joins the closest leaf entry when the merged
/// radius stays within the threshold, otherwise it starts a new entry; nodes with
/// more than `branching` entries split around their farthest pair of entries.
class CFTree {
 public:
  struct Node {
    bool leaf = true;
    std::vector<CF> entries;
    std::vector<std::unique_ptr<Node>> children;  // non-leaf: children[i] summarized by entries[i]
  };

  CFTree(std::size_t dim, double threshold, int branching);

  void insert(const double* x);
  const Node& root() const { return *root_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t points() const noexcept { return points_; }
  int height() const;
  std::vector<CF> leaf_entries() const;

 private:
  std::size_t dim_;
  double threshold_;
  std::size_t branching_;
  std::size_t points_ = 0;
  std::unique_ptr<Node> root_;
};

/// `fraction` of the median pairwise distance of up to 100 evenly strided rows.
double default_birch_threshold(const LatentMatrix& points, double fraction = 0.25);

/// CF tree (phase 1), agglomeration of the leaf-entry centroids down to k with the
/// `global` linkage (phase 2), nearest-centroid assignment of every point (phase 3).
/// threshold <= 0 selects default_birch_threshold. Objective: sum of squared
/// distances to the assigned centroid.
ClusterAssignment birch(const LatentMatrix& points, int k, double threshold = 0.0, int branching = 50,
                        Linkage global = Linkage::ward);

/// Contingency counts: table[i][j] = |{s : a[s] == i and b[s] == j}|.
std::vector<std::vector<long>> contingency(const std::vector<int>& a, int ka, const std::vector<int>& b, int kb);

/// Permutation p maximizing sum_i weight[i][p[i]] for a square matrix; ties go to
/// the lexicographically smallest p. Exhaustive for k <= 8, Hungarian method
/// with lexicographic refinement above.
std::vector<int> max_weight_permutation(const std::vector<std::vector<long>>& weight);

}  // namespace pf
