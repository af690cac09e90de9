#pragma once

#include <vector>

#include "cval/cluster.hpp"
#include "cval/core.hpp"
#include "cval/matrix.hpp"

namespace cval {

enum class MatchStrategy { centroid_distance, intersection_via_transfer };
std::string to_string(MatchStrategy s);

// One-to-one correspondence between validation-side clusters and
// discovery-side clusters. With unequal k the extra clusters are
// reported as unpaired instead of being forced into the assignment.
struct ClusterMatching {
  struct Entry {
    int validation_cluster = 0;  // 1-based
    int discovery_cluster = 0;   // 1-based
    double contribution = 0.0;   // this pair's share of the objective
  };
  std::vector<Entry> assignment;
  std::vector<int> unpaired_validation;
  std::vector<int> unpaired_discovery;
  double objective_value = 0.0;
  MatchStrategy strategy = MatchStrategy::intersection_via_transfer;
};

// Exact minimum-cost assignment (Kuhn-Munkres, O(n^3)). Returns, for
// each row, its assigned column. Among equal-cost optima the
// lexicographically smallest assignment vector is returned.
std::vector<std::size_t> solve_assignment(const Matrix& cost);

// Minimizes total distance between matched centroids (medoids serve as
// surrogates when no centroids exist).
ClusterMatching match_by_centroids(const ClusterModel& model2,
                                   const ClusterModel& model1);

// Maximizes the summed contingency overlap between C2md and C2tf; since
// C2tf clusters map one-to-one onto C1, this links C2md clusters to C1.
ClusterMatching match_by_intersection(const Partition& c2md,
                                      const Partition& c2tf);

}  // namespace cval
