#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "pf/cluster.hpp"

namespace pf {

/// perm[other_label] = reference label, maximizing the number of samples on which
/// reference and permuted other agree. Ties go to the lexicographically smallest perm.
std::vector<int> align_labels(const ClusterAssignment& reference, const ClusterAssignment& other);

/// Samples where the aligned labels agree (sum of the matched contingency cells).
long agreement(const ClusterAssignment& reference, const ClusterAssignment& other, const std::vector<int>& perm);

struct ConsensusResult {
  std::vector<int> labels;  // consensus label, -1 when rejected
  int k = 0;
  double reject_rate = 0;
  std::vector<std::string> committee;        // clusterer names, reference first
  std::vector<std::vector<int>> alignments;  // per member, perm into reference labels

  std::size_t size() const noexcept { return labels.size(); }
  bool accepted(std::size_t i) const { return labels.at(i) >= 0; }
  std::size_t accepted_count() const;
  nlohmann::json summary() const;
};

/// The first assignment is the reference; every other member is aligned to it. A
/// sample is accepted iff all aligned labels are identical.
ConsensusResult hybrid_cluster(const std::vector<ClusterAssignment>& assignments);

}  // namespace pf
