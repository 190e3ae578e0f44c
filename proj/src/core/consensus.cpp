#include "pf/consensus.hpp"

namespace pf {

namespace {

void check_pair(const ClusterAssignment& a, const ClusterAssignment& b) {
  require(a.size() == b.size(), ErrorKind::data,
          "assignments cover different sample sets (" + std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
              " samples)");
  require(a.k == b.k, ErrorKind::config,
          "assignments have different k (" + std::to_string(a.k) + " vs " + std::to_string(b.k) + ")");
  a.validate();
  b.validate();
}

}  // namespace

std::vector<int> align_labels(const ClusterAssignment& reference, const ClusterAssignment& other) {
  check_pair(reference, other);
  // weight[o][r]: samples with other label o and reference label r.
  return max_weight_permutation(contingency(other.labels, other.k, reference.labels, reference.k));
}

long agreement(const ClusterAssignment& reference, const ClusterAssignment& other, const std::vector<int>& perm) {
  check_pair(reference, other);
  long n = 0;
  for (std::size_t i = 0; i < reference.size(); ++i) n += perm.at(static_cast<std::size_t>(other.labels[i])) == reference.labels[i];
  return n;
}

std::size_t ConsensusResult::accepted_count() const {
  std::size_t n = 0;
  for (int l : labels) n += l >= 0;
  return n;
}

nlohmann::json ConsensusResult::summary() const {
  return {{"reject_rate", reject_rate},
          {"accepted", accepted_count()},
          {"rejected", size() - accepted_count()},
          {"samples", size()},
          {"k", k},
          {"committee", committee},
          {"reference", committee.empty() ? "" : committee.front()},
          {"rule", "unanimous"},
          {"alignments", alignments}};
}

ConsensusResult hybrid_cluster(const std::vector<ClusterAssignment>& assignments) {
  require(assignments.size() >= 2, ErrorKind::config, "hybrid clustering needs at least two assignments");
  const ClusterAssignment& ref = assignments.front();
  ConsensusResult r;
  r.k = ref.k;
  std::vector<std::vector<int>> aligned;
  for (const auto& a : assignments) {
    std::vector<int> perm = &a == &ref ? std::vector<int>() : align_labels(ref, a);
    if (perm.empty()) {
      check_pair(ref, a);
      for (int i = 0; i < ref.k; ++i) perm.push_back(i);
    }
    std::vector<int> lab(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) lab[i] = perm[static_cast<std::size_t>(a.labels[i])];
    aligned.push_back(std::move(lab));
    r.alignments.push_back(std::move(perm));
    r.committee.push_back(a.clusterer);
  }
  const std::size_t M = ref.size();
  r.labels.assign(M, -1);
  std::size_t rejected = 0;
  for (std::size_t i = 0; i < M; ++i) {
    bool same = true;
    for (const auto& lab : aligned) same = same && lab[i] == aligned.front()[i];
    if (same) {
      r.labels[i] = aligned.front()[i];
    } else {
      ++rejected;
    }
  }
  r.reject_rate = M ? static_cast<double>(rejected) / static_cast<double>(M) : 0.0;
  return r;
}

}  // namespace pf
