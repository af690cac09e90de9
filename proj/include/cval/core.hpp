#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cval/error.hpp"
#include "cval/matrix.hpp"

namespace cval {

// Object-by-variable data. Immutable after construction; the factory
// enforces the ingestion invariants (finite values, unique ids).
struct FeatureDataset {
  Matrix values;  // n_objects x n_variables
  std::vector<std::string> object_ids;
  std::vector<std::string> variable_ids;

  static FeatureDataset create(Matrix values,
                               std::vector<std::string> object_ids,
                               std::vector<std::string> variable_ids);

  std::size_t n_objects() const { return values.rows(); }
  std::size_t n_variables() const { return values.cols(); }
};

// Object-by-object dissimilarities: symmetric, zero diagonal, nonnegative.
struct DissimilarityDataset {
  Matrix d;  // n x n
  std::vector<std::string> object_ids;

  static DissimilarityDataset create(Matrix d,
                                     std::vector<std::string> object_ids);

  std::size_t n_objects() const { return d.rows(); }
};

// Cluster labels in 1..k over a fixed object sequence.
struct Partition {
  std::vector<int> labels;
  int k = 0;
  std::vector<std::string> object_ids;

  static Partition create(std::vector<int> labels, int k,
                          std::vector<std::string> object_ids);

  std::size_t n_objects() const { return labels.size(); }
  std::vector<std::size_t> cluster_sizes() const;  // index 0 -> cluster 1
};

enum class Algorithm { kmeans, hierarchical, pam };
enum class Preprocessing { none, standardize };
enum class Linkage { single, complete, average };

std::string to_string(Algorithm a);
std::string to_string(Preprocessing p);
std::string to_string(Linkage l);
Algorithm algorithm_from_string(const std::string& s);
Preprocessing preprocessing_from_string(const std::string& s);
Linkage linkage_from_string(const std::string& s);

// Frozen method spec: everything Step 1 selects, including k and
// preprocessing, travels in this one value.
struct ClusteringMethod {
  Algorithm algorithm = Algorithm::kmeans;
  int k = 2;
  Preprocessing preprocessing = Preprocessing::none;
  std::optional<Linkage> linkage;            // hierarchical only
  std::optional<std::uint64_t> seed;         // kmeans only
  std::optional<int> max_iter;               // kmeans only
  std::optional<int> n_restarts;             // kmeans only

  void validate() const;
  std::string describe() const;
};

struct StandardizationParams {
  std::vector<double> mean;
  std::vector<double> sd;
};

struct StandardizedData {
  FeatureDataset data;
  StandardizationParams params;
};

// Relabels to first-occurrence order and drops empty label values.
Partition canonicalize(const Partition& p);

// k1 x k2 cross-counts; requires identical object_id sequences.
std::vector<std::vector<long long>> contingency_table(const Partition& p1,
                                                      const Partition& p2);

// Column-wise (x - mean) / sd with the n-1 standard deviation.
StandardizedData standardize(const FeatureDataset& d);

// Applies previously fitted params (used to carry D1's preprocessing
// onto validation data).
FeatureDataset apply_standardization(const FeatureDataset& d,
                                     const StandardizationParams& params);

// Pairwise Euclidean distances.
DissimilarityDataset euclidean_dissimilarity(const FeatureDataset& d);

// FNV-1a over a canonical serialization (ids plus hexfloat values); the
// engine's seal and the split manifest use this.
std::uint64_t content_hash(const FeatureDataset& d);
std::uint64_t content_hash(const DissimilarityDataset& d);
std::string hash_hex(std::uint64_t h);

// CSV formats: feature/dissimilarity files have a header row of
// variable (or object) ids and an id in the first column of each row;
// partitions are two columns (object_id,label).
FeatureDataset read_feature_csv(const std::string& path);
DissimilarityDataset read_dissimilarity_csv(const std::string& path);
Partition read_partition_csv(const std::string& path);
void write_feature_csv(const FeatureDataset& d, const std::string& path);
void write_dissimilarity_csv(const DissimilarityDataset& d,
                             const std::string& path);
void write_partition_csv(const Partition& p, const std::string& path);

// Shared formatting used everywhere a double lands in an output file,
// so reruns are byte-identical.
std::string format_double(double v);

}  // namespace cval
