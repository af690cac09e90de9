#pragma once

#include <optional>
#include <vector>

#include "cval/core.hpp"
#include "cval/split.hpp"

namespace cval {

// A fitted clustering plus the representation its transfer rule needs:
// centroids for kmeans, medoids for pam, the merge trace for
// hierarchical. Centroids live in the preprocessed space; when the
// method standardizes, the fitted params ride along.
struct ClusterModel {
  ClusteringMethod method;
  Partition partition;
  std::optional<Matrix> centroids;  // k x p
  std::optional<std::vector<std::string>> medoid_ids;
  // Medoid coordinates when the source data had feature form; lets the
  // centroid matcher treat medoids as centroid surrogates.
  std::optional<Matrix> medoid_coords;
  struct Merge {
    int a = 0;
    int b = 0;
    double height = 0.0;
  };
  std::optional<std::vector<Merge>> merge_trace;
  std::optional<StandardizationParams> standardization;
  std::optional<double> objective;  // within-SS (kmeans) / total diss (pam)
};

ClusterModel kmeans(const FeatureDataset& data, const ClusteringMethod& method);
ClusterModel hierarchical(const Dataset& data, const ClusteringMethod& method);
ClusterModel pam(const DissimilarityDataset& data,
                 const ClusteringMethod& method);

// Runs the method's full pipeline (preprocessing included) on the given
// data. This is the method-based route: everything is recomputed here.
ClusterModel apply_method(const Dataset& data, const ClusteringMethod& method);

// Wraps an externally computed partition (consensus clustering etc.) so
// the rest of the toolkit can treat it like a fitted model.
ClusterModel external_model(Partition partition,
                            std::optional<Matrix> centroids = std::nullopt,
                            std::optional<std::vector<std::string>> medoid_ids =
                                std::nullopt);

}  // namespace cval
