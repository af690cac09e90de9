#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cval/cluster.hpp"
#include "cval/indices.hpp"
#include "cval/split.hpp"

namespace cval {

enum class NullKind { uniform_range, gaussian_moments };
std::string to_string(NullKind k);
NullKind null_kind_from_string(const std::string& s);

// Homogeneous-data generator fitted to an observed dataset: either the
// bounding hyperrectangle with independent uniform draws, or a single
// multivariate Gaussian matched to mean and covariance.
struct NullModel {
  NullKind kind = NullKind::uniform_range;
  std::size_t n_objects = 0;
  std::vector<std::string> variable_ids;
  std::vector<double> lo, hi;          // uniform_range
  std::vector<double> mean;            // gaussian_moments
  Matrix chol;                         // lower Cholesky factor of covariance
  bool ridged = false;                 // covariance needed regularization
};

NullModel fit_null(const FeatureDataset& data, NullKind kind);

// Draws a dataset of the source's shape (or n_rows when given).
FeatureDataset simulate(const NullModel& model, std::uint64_t seed);
FeatureDataset simulate(const NullModel& model, std::size_t n_rows,
                        std::uint64_t seed);

struct MonteCarloResult {
  double t_observed = 0.0;
  std::vector<double> t_null;
  int replicates = 0;  // M
  double p_value = 1.0;
  std::string statistic_name;
  Direction direction = Direction::higher_better;
};

// The add-one formula: (#{t* at least as extreme as t} + 1) / (M + 1).
// Ties count toward the exceedance set.
double add_one_p_value(double t_observed, const std::vector<double>& t_null,
                       Direction direction);

// Statistic over a clustered dataset, registered by name ("asw", "ch",
// "homogeneity", "separation").
struct ClusterStatistic {
  std::string name;
  Direction direction = Direction::higher_better;
  std::function<double(const FeatureDataset&, const Partition&)> fn;
};
ClusterStatistic cluster_statistic(const std::string& name);

MonteCarloResult monte_carlo_test(const FeatureDataset& data,
                                  const ClusteringMethod& method,
                                  const ClusterStatistic& statistic,
                                  NullKind model_kind, int replicates,
                                  std::uint64_t seed);

// Null-reference backdrop for result-based validation: the observed
// value is a partition-similarity index between C2md and C2tf; each
// replicate regenerates discovery- and validation-shaped data from the
// null model (fitted on D2, or on D1 plus D2) and reruns the pipeline.
MonteCarloResult null_reference_validation(const SplitPair& pair,
                                           const ClusteringMethod& method,
                                           const std::string& similarity_index,
                                           NullKind model_kind, int replicates,
                                           std::uint64_t seed,
                                           bool fit_on_union = false);

}  // namespace cval
