#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "pf/consensus.hpp"
#include "pf/embed.hpp"
#include "pf/evaluate.hpp"

using namespace pf;

namespace {

const std::vector<std::string> kFour = {"arch", "whorl", "left_loop", "right_loop"};

ClusterAssignment assignment(std::vector<int> labels, int k, std::string name = "x") {
  ClusterAssignment a;
  a.labels = std::move(labels);
  a.k = k;
  a.clusterer = std::move(name);
  return a;
}

std::vector<int> relabel(const std::vector<int>& l, const std::vector<int>& perm) {
  std::vector<int> out(l.size());
  for (std::size_t i = 0; i < l.size(); ++i) out[i] = perm[l[i]];
  return out;
}

std::vector<int> random_labels(std::size_t n, int k, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> d(0, k - 1);
  std::vector<int> l(n);
  for (auto& v : l) v = d(rng);
  return l;
}

ConfusionMatrix matrix(std::vector<std::vector<long>> counts) {
  ConfusionMatrix cm;
  cm.classes.resize(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) cm.classes[i] = "c" + std::to_string(i);
  cm.counts = std::move(counts);
  return cm;
}

}  // namespace

TEST(Align, RecoversPermutation) {
  std::mt19937_64 rng(1);
  const auto ref = random_labels(200, 4, rng);
  const std::vector<int> perm = {2, 0, 3, 1};
  const auto other = relabel(ref, perm);  // other label perm[r] for reference label r
  const auto back = align_labels(assignment(ref, 4), assignment(other, 4));
  for (int r = 0; r < 4; ++r) EXPECT_EQ(back[perm[r]], r);
  EXPECT_EQ(agreement(assignment(ref, 4), assignment(other, 4), back), 200);
}

TEST(Align, OptimalAgainstAllPermutations) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 200; ++t) {
    const auto a = assignment(random_labels(40, 4, rng), 4), b = assignment(random_labels(40, 4, rng), 4);
    const long got = agreement(a, b, align_labels(a, b));
    std::vector<int> q = {0, 1, 2, 3};
    long best = 0;
    do best = std::max(best, agreement(a, b, q));
    while (std::next_permutation(q.begin(), q.end()));
    EXPECT_EQ(got, best);
  }
}

TEST(Align, MismatchedAssignmentsRejected) {
  EXPECT_THROW(align_labels(assignment({0, 1}, 2), assignment({0, 1, 1}, 2)), Error);
  EXPECT_THROW(align_labels(assignment({0, 1}, 2), assignment({0, 1}, 3)), Error);
}

TEST(Consensus, IdenticalAssignmentsRejectNothing) {
  std::mt19937_64 rng(3);
  const auto l = random_labels(50, 4, rng);
  const auto c = hybrid_cluster({assignment(l, 4, "kmeans"), assignment(l, 4, "agg"), assignment(l, 4, "birch")});
  EXPECT_EQ(c.reject_rate, 0.0);
  EXPECT_EQ(c.labels, l);
  EXPECT_EQ(c.committee, (std::vector<std::string>{"kmeans", "agg", "birch"}));
}

TEST(Consensus, ThreeDisagreementsOfHundred) {
  std::mt19937_64 rng(4);
  const auto l = random_labels(100, 4, rng);
  auto other = relabel(l, {1, 2, 3, 0});
  for (int i : {5, 17, 60}) other[i] = (other[i] + 1) % 4;
  const auto c = hybrid_cluster({assignment(l, 4), assignment(other, 4)});
  EXPECT_NEAR(c.reject_rate, 0.03, 1e-15);
  for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(c.accepted(i), i != 5 && i != 17 && i != 60);
  EXPECT_EQ(c.accepted_count(), 97u);
}

TEST(Consensus, SampleSplitBetweenClustersIsRejected) {
  // Two clusters, methods agree except sample 2.
  const auto c = hybrid_cluster({assignment({0, 0, 0, 1, 1, 1}, 2), assignment({1, 1, 0, 0, 0, 0}, 2)});
  EXPECT_EQ(c.labels, (std::vector<int>{0, 0, -1, 1, 1, 1}));
}

TEST(Consensus, PermutationInvarianceAndMonotonicity) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 30; ++t) {
    const auto truth = random_labels(80, 4, rng);
    auto noisy = [&](double rate) {
      auto l = truth;
      std::uniform_real_distribution<double> u(0, 1);
      for (auto& v : l)
        if (u(rng) < rate) v = static_cast<int>(rng() % 4);
      return l;
    };
    const auto a = noisy(0.1), b = noisy(0.1), c = noisy(0.1);
    const auto base = hybrid_cluster({assignment(a, 4), assignment(b, 4)});
    const auto permuted = hybrid_cluster({assignment(a, 4), assignment(relabel(b, {3, 1, 0, 2}), 4)});
    EXPECT_EQ(base.labels, permuted.labels);
    EXPECT_EQ(base.reject_rate, permuted.reject_rate);

    const auto three = hybrid_cluster({assignment(a, 4), assignment(b, 4), assignment(c, 4)});
    for (std::size_t i = 0; i < 80; ++i) {
      if (!base.accepted(i)) {
        EXPECT_FALSE(three.accepted(i));
      }
    }
    // Accepted samples agree with every aligned member.
    for (std::size_t i = 0; i < 80; ++i) {
      if (!three.accepted(i)) continue;
      EXPECT_EQ(three.labels[i], a[i]);
      EXPECT_EQ(three.alignments[1][b[i]], a[i]);
      EXPECT_EQ(three.alignments[2][c[i]], a[i]);
    }
  }
}

TEST(Consensus, SummaryAndErrors) {
  const auto c = hybrid_cluster({assignment({0, 1, 1}, 2, "kmeans"), assignment({1, 0, 0}, 2, "agg")});
  const auto s = c.summary();
  EXPECT_EQ(s.at("reject_rate").get<double>(), 0.0);
  EXPECT_EQ(s.at("committee").at(0).get<std::string>(), "kmeans");
  EXPECT_THROW(hybrid_cluster({assignment({0, 1, 1}, 2)}), Error);
  EXPECT_THROW(hybrid_cluster({assignment({0, 1}, 2), assignment({0, 1, 0}, 2)}), Error);
}

TEST(Metrics, TwoClassHandExample) {
  const auto cm = matrix({{40, 10}, {5, 45}});
  EXPECT_NEAR(accuracy_all(cm), 0.85, 1e-12);
  EXPECT_NEAR(recall_average(cm), 0.85, 1e-12);
  EXPECT_NEAR(precision_average(cm), (40.0 / 45 + 45.0 / 55) / 2, 1e-12);
  const double p0 = 40.0 / 45, r0 = 0.8, p1 = 45.0 / 55, r1 = 0.9;
  EXPECT_NEAR(f1_average(cm), (2 * p0 * r0 / (p0 + r0) + 2 * p1 * r1 / (p1 + r1)) / 2, 1e-12);
}

TEST(Metrics, DegenerateMatrices) {
  const auto diag = matrix({{3, 0, 0}, {0, 5, 0}, {0, 0, 1}});
  EXPECT_EQ(accuracy_all(diag), 1.0);
  EXPECT_EQ(precision_average(diag), 1.0);
  EXPECT_EQ(recall_average(diag), 1.0);
  EXPECT_EQ(f1_average(diag), 1.0);
  EXPECT_EQ(accuracy_all(matrix({{0, 4}, {6, 0}})), 0.0);

  std::vector<std::string> warnings;
  const auto empty_row = matrix({{4, 0}, {0, 0}});
  EXPECT_NEAR(recall_average(empty_row, &warnings), 0.5, 1e-15);
  EXPECT_FALSE(warnings.empty());
  EXPECT_THROW(accuracy_all(matrix({{0, 0}, {0, 0}})), Error);
}

TEST(Metrics, RandomMatricesMatchStraightLineAndPermutationInvariance) {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<long> d(0, 50);
  for (int t = 0; t < 100; ++t) {
    std::vector<std::vector<long>> c(4, std::vector<long>(4));
    for (auto& r : c)
      for (auto& v : r) v = d(rng);
    const auto cm = matrix(c);
    const auto want = oracle::plain_metrics(c);
    EXPECT_NEAR(accuracy_all(cm), want.acc, 1e-12);
    EXPECT_NEAR(precision_average(cm), want.p, 1e-12);
    EXPECT_NEAR(recall_average(cm), want.r, 1e-12);
    EXPECT_NEAR(f1_average(cm), want.f1, 1e-12);

    const std::vector<int> q = {2, 0, 3, 1};
    std::vector<std::vector<long>> pc(4, std::vector<long>(4));
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) pc[q[i]][q[j]] = c[i][j];
    EXPECT_NEAR(precision_average(matrix(pc)), want.p, 1e-12);
    EXPECT_NEAR(f1_average(matrix(pc)), want.f1, 1e-12);
  }
}

TEST(Mapping, RenamingAndFlip) {
  std::mt19937_64 rng(7);
  const auto truth = random_labels(60, 4, rng);
  const std::vector<int> perm = {3, 2, 0, 1};
  const auto labels = relabel(truth, perm);
  const auto m = map_clusters_to_classes(labels, truth, 4);
  for (int c = 0; c < 4; ++c) EXPECT_EQ(m[perm[c]], c);
  EXPECT_EQ(map_clusters_to_classes({1, 1, 0, 0}, {0, 0, 1, 1}, 2), (std::vector<int>{1, 0}));
  EXPECT_THROW(map_clusters_to_classes({0, 1}, {0, 4}, 4), Error);
}

TEST(Mapping, OptimalAgainstAllPermutations) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 200; ++t) {
    const auto labels = random_labels(50, 4, rng), truth = random_labels(50, 4, rng);
    auto matched = [&](const std::vector<int>& m) {
      long s = 0;
      for (std::size_t i = 0; i < labels.size(); ++i) s += m[labels[i]] == truth[i];
      return s;
    };
    std::vector<int> q = {0, 1, 2, 3};
    long best = 0;
    do best = std::max(best, matched(q));
    while (std::next_permutation(q.begin(), q.end()));
    EXPECT_EQ(matched(map_clusters_to_classes(labels, truth, 4)), best);
  }
}

TEST(Evaluate, PerfectAndHalfRejected) {
  std::vector<int> truth;
  for (int i = 0; i < 40; ++i) truth.push_back(i % 4);
  ConsensusResult c;
  c.k = 4;
  c.labels = relabel(truth, {1, 0, 3, 2});
  auto r = evaluate(c, truth, kFour);
  EXPECT_EQ(r.a_all, 1.0);
  EXPECT_EQ(r.p_average, 1.0);
  EXPECT_EQ(r.r_average, 1.0);
  EXPECT_EQ(r.f1_average, 1.0);
  EXPECT_EQ(r.evaluated, 40u);

  for (int i = 0; i < 40; i += 2) c.labels[i] = -1;
  c.reject_rate = 0.5;
  r = evaluate(c, truth, kFour);
  EXPECT_EQ(r.a_all, 1.0);
  EXPECT_EQ(r.reject_rate, 0.5);
  EXPECT_EQ(r.evaluated, 20u);

  std::fill(c.labels.begin(), c.labels.end(), -1);
  EXPECT_THROW(evaluate(c, truth, kFour), Error);
}

TEST(Evaluate, KnownFourClassConfusion) {
  // Mapped confusion, rows = class: {{8,1,1,0},{0,9,0,1},{2,0,7,1},{0,0,0,10}}.
  const std::vector<std::vector<long>> want = {{8, 1, 1, 0}, {0, 9, 0, 1}, {2, 0, 7, 1}, {0, 0, 0, 10}};
  std::vector<int> truth, labels;
  const std::vector<int> cluster_of_class = {2, 3, 0, 1};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (long n = 0; n < want[i][j]; ++n) truth.push_back(i), labels.push_back(cluster_of_class[j]);
  const auto r = evaluate(assignment(labels, 4), truth, kFour);
  EXPECT_EQ(r.confusion.counts, want);
  const auto p = oracle::plain_metrics(want);
  EXPECT_NEAR(r.a_all, 34.0 / 40, 1e-12);
  EXPECT_NEAR(r.p_average, p.p, 1e-12);
  EXPECT_NEAR(r.r_average, p.r, 1e-12);
  EXPECT_NEAR(r.f1_average, p.f1, 1e-12);
  EXPECT_EQ(r.to_json().at("a_all").get<double>(), r.a_all);
}

TEST(Pca, PlanarPointsKeepDistances) {
  std::mt19937_64 rng(9);
  const auto plane = oracle::random_tensor({30, 2}, rng, -3, 3);
  // Orthonormal 2-frame in 5-D.
  const double u[5] = {0.6, 0.8, 0, 0, 0}, v[5] = {0, 0, 0, 1, 0};
  LatentMatrix x(Shape{30, 5});
  for (int i = 0; i < 30; ++i)
    for (int d = 0; d < 5; ++d) x[i * 5 + d] = plane[i * 2] * u[d] + plane[i * 2 + 1] * v[d] + 7.0;
  const auto y = pca_2d(x);
  for (int i = 0; i < 30; ++i)
    for (int j = i + 1; j < 30; ++j) {
      const double a = std::hypot(plane[i * 2] - plane[j * 2], plane[i * 2 + 1] - plane[j * 2 + 1]);
      const double b = std::hypot(y[i * 2] - y[j * 2], y[i * 2 + 1] - y[j * 2 + 1]);
      EXPECT_NEAR(a, b, 1e-8);
    }
}

TEST(Pca, ExplainedVarianceMatchesCovarianceEigenvalues) {
  std::mt19937_64 rng(10);
  auto x = oracle::random_tensor({25, 3}, rng);
  for (int i = 0; i < 25; ++i) x[i * 3] *= 4, x[i * 3 + 1] *= 2;
  std::vector<double> var;
  pca_2d(x, &var);
  // Covariance by hand, eigenvalues by Jacobi rotations.
  double mean[3] = {0, 0, 0}, c[3][3] = {};
  for (int i = 0; i < 25; ++i)
    for (int d = 0; d < 3; ++d) mean[d] += x[i * 3 + d] / 25;
  for (int i = 0; i < 25; ++i)
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) c[a][b] += (x[i * 3 + a] - mean[a]) * (x[i * 3 + b] - mean[b]) / 24;
  for (int sweep = 0; sweep < 50; ++sweep)
    for (int p = 0; p < 3; ++p)
      for (int q = p + 1; q < 3; ++q) {
        if (std::abs(c[p][q]) < 1e-300) continue;
        const double theta = 0.5 * std::atan2(2 * c[p][q], c[q][q] - c[p][p]);
        const double cs = std::cos(theta), sn = std::sin(theta);
        for (int k = 0; k < 3; ++k) {
          const double a = c[k][p], b = c[k][q];
          c[k][p] = cs * a - sn * b;
          c[k][q] = sn * a + cs * b;
        }
        for (int k = 0; k < 3; ++k) {
          const double a = c[p][k], b = c[q][k];
          c[p][k] = cs * a - sn * b;
          c[q][k] = sn * a + cs * b;
        }
      }
  std::vector<double> eig = {c[0][0], c[1][1], c[2][2]};
  std::sort(eig.rbegin(), eig.rend());
  EXPECT_NEAR(var[0], eig[0], 1e-10);
  EXPECT_NEAR(var[1], eig[1], 1e-10);
}

TEST(Tsne, DeterministicFiniteAndSeparatesBlobs) {
  std::mt19937_64 rng(11);
  LatentMatrix x(Shape{60, 4});
  std::normal_distribution<double> n(0, 0.3);
  for (int i = 0; i < 60; ++i)
    for (int d = 0; d < 4; ++d) x[i * 4 + d] = n(rng) + (i < 30 && d == 0 ? 8.0 : 0.0);
  TsneOptions opt;
  opt.perplexity = 10;
  const auto a = tsne_2d(x, 3, opt), b = tsne_2d(x, 3, opt);
  ASSERT_EQ(a.shape(), (Shape{60, 2}));
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_EQ(a[i], b[i]);
  EXPECT_TRUE(a.all_finite());
  // Nearest neighbor of every point lies in its own blob.
  for (int i = 0; i < 60; ++i) {
    int nn = -1;
    double best = 1e300;
    for (int j = 0; j < 60; ++j) {
      if (j == i) continue;
      const double d = std::hypot(a[i * 2] - a[j * 2], a[i * 2 + 1] - a[j * 2 + 1]);
      if (d < best) best = d, nn = j;
    }
    EXPECT_EQ(nn < 30, i < 30);
  }
}

TEST(Tsne, Errors) {
  LatentMatrix x(Shape{30, 2});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
  EXPECT_THROW(tsne_2d(x, 0), Error);  // perplexity 30 >= 30/3
  EXPECT_THROW(pca_2d(LatentMatrix(Shape{2, 3})), Error);
  EXPECT_THROW(parse_embed_method("umap"), Error);
}

TEST(Svg, WritesOneMarkerPerPoint) {
  const auto path = std::filesystem::temp_directory_path() / "pf_scatter_test.svg";
  Tensor<double> xy(Shape{3, 2}, std::vector<double>{0, 0, 1, 1, 2, 0});
  write_svg_scatter(path, xy, {0, 1, -1}, {true, false, true}, {"a", "b"}, "t");
  std::ifstream f(path);
  const std::string s((std::istreambuf_iterator<char>(f)), {});
  std::size_t circles = 0;
  for (std::size_t p = s.find("<circle"); p != std::string::npos; p = s.find("<circle", p + 1)) ++circles;
  EXPECT_EQ(circles, 3u + 2u);  // points plus legend
  EXPECT_NE(s.find("fill=\"none\""), std::string::npos);
  std::filesystem::remove(path);
}
