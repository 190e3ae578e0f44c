#include "pf/evaluate.hpp"

namespace pf {

namespace {

double safe_ratio(double num, double den) { return den > 0 ? num / den : 0.0; }

}  // namespace

long ConfusionMatrix::total() const {
  long t = 0;
  for (const auto& row : counts)
    for (long v : row) t += v;
  return t;
}

long ConfusionMatrix::row_sum(std::size_t i) const {
  long s = 0;
  for (long v : counts.at(i)) s += v;
  return s;
}

long ConfusionMatrix::col_sum(std::size_t j) const {
  long s = 0;
  for (const auto& row : counts) s += row.at(j);
  return s;
}

void ConfusionMatrix::validate() const {
  require(!counts.empty(), ErrorKind::data, "empty confusion matrix");
  for (const auto& row : counts) {
    require(row.size() == counts.size(), ErrorKind::dimension, "confusion matrix must be square");
    for (long v : row) require(v >= 0, ErrorKind::data, "confusion matrix has a negative count");
  }
  require(classes.empty() || classes.size() == counts.size(), ErrorKind::dimension,
          "class name count does not match the confusion matrix");
}

std::vector<int> map_clusters_to_classes(const std::vector<int>& labels, const std::vector<int>& truth, int k) {
  require(labels.size() == truth.size(), ErrorKind::dimension,
          "labels and truth differ in length (" + std::to_string(labels.size()) + " vs " + std::to_string(truth.size()) + ")");
  require(k >= 1, ErrorKind::config, "k must be >= 1");
  std::vector<std::vector<long>> w(static_cast<std::size_t>(k), std::vector<long>(static_cast<std::size_t>(k), 0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    require(labels[i] < k, ErrorKind::data, "cluster label " + std::to_string(labels[i]) + " outside [0,k)");
    require(truth[i] >= 0 && truth[i] < k, ErrorKind::config,
            "class index " + std::to_string(truth[i]) + " at sample " + std::to_string(i) +
                " does not fit k = " + std::to_string(k) + " classes");
    ++w[static_cast<std::size_t>(labels[i])][static_cast<std::size_t>(truth[i])];
  }
  return max_weight_permutation(w);
}

ConfusionMatrix confusion_matrix(const std::vector<int>& labels, const std::vector<int>& truth,
                                 const std::vector<int>& mapping, const std::vector<std::string>& classes) {
  require(labels.size() == truth.size(), ErrorKind::dimension, "labels and truth differ in length");
  const std::size_t k = mapping.size();
  ConfusionMatrix cm;
  cm.classes = classes;
  cm.counts.assign(k, std::vector<long>(k, 0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    ++cm.counts.at(static_cast<std::size_t>(truth[i])).at(static_cast<std::size_t>(mapping.at(static_cast<std::size_t>(labels[i]))));
  }
  cm.validate();
  return cm;
}

double accuracy_all(const ConfusionMatrix& cm) {
  cm.validate();
  const long total = cm.total();
  require(total > 0, ErrorKind::data, "accuracy of an empty confusion matrix");
  long tp = 0;
  for (std::size_t i = 0; i < cm.k(); ++i) tp += cm.counts[i][i];
  return static_cast<double>(tp) / static_cast<double>(total);
}

double precision_average(const ConfusionMatrix& cm, std::vector<std::string>* warnings) {
  cm.validate();
  double s = 0;
  for (std::size_t j = 0; j < cm.k(); ++j) {
    const long col = cm.col_sum(j);
    if (col == 0 && warnings)
      warnings->push_back("class " + (cm.classes.empty() ? std::to_string(j) : cm.classes[j]) +
                          ": no samples assigned, precision counted as 0");
    s += safe_ratio(static_cast<double>(cm.counts[j][j]), static_cast<double>(col));
  }
  return s / static_cast<double>(cm.k());
}

double recall_average(const ConfusionMatrix& cm, std::vector<std::string>* warnings) {
  cm.validate();
  double s = 0;
  for (std::size_t i = 0; i < cm.k(); ++i) {
    const long row = cm.row_sum(i);
    if (row == 0 && warnings)
      warnings->push_back("class " + (cm.classes.empty() ? std::to_string(i) : cm.classes[i]) +
                          ": no true samples, recall counted as 0");
    s += safe_ratio(static_cast<double>(cm.counts[i][i]), static_cast<double>(row));
  }
  return s / static_cast<double>(cm.k());
}

std::vector<ClassMetrics> per_class_metrics(const ConfusionMatrix& cm) {
  cm.validate();
  std::vector<ClassMetrics> out(cm.k());
  for (std::size_t c = 0; c < cm.k(); ++c) {
    const double tp = static_cast<double>(cm.counts[c][c]);
    out[c].precision = safe_ratio(tp, static_cast<double>(cm.col_sum(c)));
    out[c].recall = safe_ratio(tp, static_cast<double>(cm.row_sum(c)));
    const double pr = out[c].precision + out[c].recall;
    out[c].f1 = pr > 0 ? 2 * out[c].precision * out[c].recall / pr : 0.0;
  }
  return out;
}

double f1_average(const ConfusionMatrix& cm) {
  double s = 0;
  for (const auto& m : per_class_metrics(cm)) s += m.f1;
  return s / static_cast<double>(cm.k());
}

MetricsReport metrics_from_confusion(const ConfusionMatrix& cm, double reject_rate) {
  MetricsReport r;
  r.confusion = cm;
  r.a_all = accuracy_all(cm);
  r.p_average = precision_average(cm, &r.warnings);
  r.r_average = recall_average(cm, &r.warnings);
  r.f1_average = f1_average(cm);
  r.per_class = per_class_metrics(cm);
  r.reject_rate = reject_rate;
  r.evaluated = static_cast<std::size_t>(cm.total());
  return r;
}

MetricsReport evaluate(const ConsensusResult& consensus, const std::vector<int>& truth,
                       const std::vector<std::string>& classes) {
  require(truth.size() == consensus.size(), ErrorKind::data,
          "ground truth covers " + std::to_string(truth.size()) + " of " + std::to_string(consensus.size()) + " samples");
  require(classes.size() == static_cast<std::size_t>(consensus.k), ErrorKind::config,
          "class count " + std::to_string(classes.size()) + " does not match k = " + std::to_string(consensus.k));
  require(consensus.accepted_count() > 0, ErrorKind::data, "no accepted samples to evaluate");
  const auto mapping = map_clusters_to_classes(consensus.labels, truth, consensus.k);
  MetricsReport r = metrics_from_confusion(confusion_matrix(consensus.labels, truth, mapping, classes), consensus.reject_rate);
  r.mapping = mapping;
  return r;
}

MetricsReport evaluate(const ClusterAssignment& assignment, const std::vector<int>& truth,
                       const std::vector<std::string>& classes) {
  ConsensusResult c;
  c.labels = assignment.labels;
  c.k = assignment.k;
  c.committee = {assignment.clusterer};
  return evaluate(c, truth, classes);
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json pc = nlohmann::json::array();
  for (std::size_t c = 0; c < per_class.size(); ++c)
    pc.push_back({{"class", c < confusion.classes.size() ? confusion.classes[c] : std::to_string(c)},
                  {"precision", per_class[c].precision},
                  {"recall", per_class[c].recall},
                  {"f1", per_class[c].f1}});
  return {{"a_all", a_all},
          {"p_average", p_average},
          {"r_average", r_average},
          {"f1_average", f1_average},
          {"reject_rate", reject_rate},
          {"evaluated", evaluated},
          {"per_class", pc},
          {"mapping", mapping},
          {"confusion", {{"classes", confusion.classes}, {"counts", confusion.counts}}},
          {"warnings", warnings}};
}

}  // namespace pf
