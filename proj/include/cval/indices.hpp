#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cval/core.hpp"

namespace cval {

enum class Direction { higher_better, lower_better };
std::string to_string(Direction d);

struct IndexValue {
  std::string name;
  double value = 0.0;
  Direction direction = Direction::higher_better;
  std::vector<std::pair<int, double>> per_cluster;  // (cluster, value)
  bool degenerate = false;
  std::string note;
};

// Statistic + p-value pair for external-variable association tests.
struct AssociationTest {
  std::string name;
  double statistic = 0.0;
  double df1 = 0.0;
  double df2 = 0.0;  // unused for chi-square
  double p_value = 1.0;
  bool degenerate = false;
  std::string warning;
};

// Mean silhouette s(i) = (b - a) / max(a, b); singletons get s = 0.
IndexValue avg_silhouette_width(const DissimilarityDataset& data,
                                const Partition& p);
// Per-object silhouette values in object order (plot data).
std::vector<double> silhouette_values(const DissimilarityDataset& data,
                                      const Partition& p);

IndexValue calinski_harabasz(const FeatureDataset& data, const Partition& p);

// (homogeneity, separation): mean within-cluster pairwise dissimilarity
// and minimum between-cluster dissimilarity.
std::pair<IndexValue, IndexValue> homogeneity_and_separation(
    const DissimilarityDataset& data, const Partition& p);

// Relative cluster sizes sorted descending; value = largest share.
IndexValue cluster_size_profile(const Partition& p);

// Partition similarity from pair counts.
IndexValue rand_index(const Partition& p1, const Partition& p2);
IndexValue adjusted_rand(const Partition& p1, const Partition& p2);
IndexValue jaccard(const Partition& p1, const Partition& p2);
IndexValue fowlkes_mallows(const Partition& p1, const Partition& p2);

AssociationTest chi_square_association(const Partition& p,
                                       const std::vector<std::string>& v);
AssociationTest anova_f_association(const Partition& p,
                                    const std::vector<double>& v);

}  // namespace cval
