#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "pf/cluster.hpp"
#include "pf/consensus.hpp"

namespace pf {

/// counts[true class][mapped cluster].
struct ConfusionMatrix {
  std::vector<std::vector<long>> counts;
  std::vector<std::string> classes;

  std::size_t k() const noexcept { return counts.size(); }
  long total() const;
  long row_sum(std::size_t i) const;
  long col_sum(std::size_t j) const;
  void validate() const;
};

/// mapping[cluster] = class: the bijection maximizing the matched samples over
/// samples whose label is >= 0. Ties go to the lexicographically smallest mapping.
std::vector<int> map_clusters_to_classes(const std::vector<int>& labels, const std::vector<int>& truth, int k);

ConfusionMatrix confusion_matrix(const std::vector<int>& labels, const std::vector<int>& truth,
                                 const std::vector<int>& mapping, const std::vector<std::string>& classes);

/// Trace over total. Throws ErrorKind::data on an empty matrix.
double accuracy_all(const ConfusionMatrix& cm);
/// Unweighted means over classes; a class whose denominator is zero contributes 0
/// and, when `warnings` is given, is reported there.
double precision_average(const ConfusionMatrix& cm, std::vector<std::string>* warnings = nullptr);
double recall_average(const ConfusionMatrix& cm, std::vector<std::string>* warnings = nullptr);
double f1_average(const ConfusionMatrix& cm);

struct ClassMetrics {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

struct MetricsReport {
  double a_all = 0;
  double p_average = 0;
  double r_average = 0;
  double f1_average = 0;
  double reject_rate = 0;
  std::size_t evaluated = 0;  // accepted labeled samples
  std::vector<ClassMetrics> per_class;
  std::vector<int> mapping;  // cluster -> class
  ConfusionMatrix confusion;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

std::vector<ClassMetrics> per_class_metrics(const ConfusionMatrix& cm);
MetricsReport metrics_from_confusion(const ConfusionMatrix& cm, double reject_rate);

/// Metrics on the accepted samples of a consensus. truth[i] is the class of sample i.
MetricsReport evaluate(const ConsensusResult& consensus, const std::vector<int>& truth,
                       const std::vector<std::string>& classes);
/// A single clusterer evaluated as a consensus that rejects nothing.
MetricsReport evaluate(const ClusterAssignment& assignment, const std::vector<int>& truth,
                       const std::vector<std::string>& classes);

}  // namespace pf
