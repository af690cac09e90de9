#include "cval/transfer.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <unordered_map>

#include "cval/kernels.hpp"

namespace cval {

std::string to_string(TransferKind k) {
  switch (k) {
    case TransferKind::nearest_centroid: return "nearest_centroid";
    case TransferKind::nearest_medoid: return "nearest_medoid";
    case TransferKind::knn: return "knn";
    case TransferKind::identity: return "identity";
  }
  return "?";
}

TransferKind transfer_kind_from_string(const std::string& s) {
  if (s == "nearest_centroid") return TransferKind::nearest_centroid;
  if (s == "nearest_medoid") return TransferKind::nearest_medoid;
  if (s == "knn") return TransferKind::knn;
  if (s == "identity") return TransferKind::identity;
  fail(ErrorCode::invalid_data, "unknown transfer rule: " + s);
}

TransferRule default_rule(const ClusteringMethod& method, SplitMode mode) {
  if (mode == SplitMode::descriptive) return {TransferKind::identity, {}};
  switch (method.algorithm) {
    case Algorithm::kmeans: return {TransferKind::nearest_centroid, {}};
    case Algorithm::pam: return {TransferKind::nearest_medoid, {}};
    case Algorithm::hierarchical:
      return {TransferKind::knn,
              method.linkage == Linkage::single ? 1 : 3};
  }
  return {TransferKind::nearest_centroid, {}};
}

namespace {

const FeatureDataset& feature_or_fail(const Dataset& d, const char* what) {
  if (!is_feature(d))
    fail(ErrorCode::unsupported_mode,
         std::string(what) + " requires feature-form data");
  return std::get<FeatureDataset>(d);
}

// D2 in the space the model was fitted in (D1's frozen params, not
// recomputed — this is the result-based contract).
FeatureDataset model_space(const FeatureDataset& d, const ClusterModel& model) {
  if (model.standardization) return apply_standardization(d, *model.standardization);
  return d;
}

Partition identity_transfer(const ClusterModel& model, const SplitPair& pair) {
  const auto& v_ids = dataset_object_ids(pair.validation);
  std::unordered_map<std::string, int> label_of;
  for (std::size_t i = 0; i < model.partition.object_ids.size(); ++i)
    label_of[model.partition.object_ids[i]] = model.partition.labels[i];
  std::vector<int> labels;
  labels.reserve(v_ids.size());
  for (const auto& id : v_ids) {
    auto it = label_of.find(id);
    if (it == label_of.end())
      fail(ErrorCode::mismatched_objects,
           "identity transfer: object not in discovery clustering: " + id);
    labels.push_back(it->second);
  }
  return Partition::create(std::move(labels), model.partition.k, v_ids);
}

Partition nearest_centroid_transfer(const ClusterModel& model,
                                    const SplitPair& pair) {
  if (!model.centroids)
    fail(ErrorCode::invalid_data, "model has no centroids");
  FeatureDataset v =
      model_space(feature_or_fail(pair.validation, "nearest_centroid"), model);
  const Matrix& c = *model.centroids;
  std::vector<int> labels(v.n_objects());
  for (std::size_t i = 0; i < v.n_objects(); ++i) {
    auto x = v.values.row(i);
    std::size_t best = 0;
    double best_d = kernels::ops().squared_distance(x.data(), c.row(0).data(),
                                                    x.size());
    for (std::size_t j = 1; j < c.rows(); ++j) {
      double d = kernels::ops().squared_distance(x.data(), c.row(j).data(),
                                                 x.size());
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    labels[i] = static_cast<int>(best) + 1;
  }
  return Partition::create(std::move(labels), model.partition.k, v.object_ids);
}

std::size_t index_of(const std::vector<std::string>& ids,
                     const std::string& id) {
  auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end())
    fail(ErrorCode::mismatched_objects, "object id not found: " + id);
  return static_cast<std::size_t>(it - ids.begin());
}

Partition nearest_medoid_transfer(const ClusterModel& model,
                                  const SplitPair& pair) {
  if (!model.medoid_ids)
    fail(ErrorCode::invalid_data, "model has no medoids");
  const auto& medoid_ids = *model.medoid_ids;
  const auto& v_ids = dataset_object_ids(pair.validation);
  std::vector<int> labels(v_ids.size());

  if (is_feature(pair.validation)) {
    const auto& d1 = feature_or_fail(pair.discovery, "nearest_medoid");
    FeatureDataset d1m = model_space(d1, model);
    FeatureDataset v =
        model_space(std::get<FeatureDataset>(pair.validation), model);
    Matrix med(medoid_ids.size(), d1m.n_variables());
    for (std::size_t j = 0; j < medoid_ids.size(); ++j) {
      auto r = d1m.values.row(index_of(d1m.object_ids, medoid_ids[j]));
      std::copy(r.begin(), r.end(), med.row(j).begin());
    }
    for (std::size_t i = 0; i < v.n_objects(); ++i) {
      auto x = v.values.row(i);
      std::size_t best = 0;
      double best_d = kernels::ops().squared_distance(x.data(),
                                                      med.row(0).data(), x.size());
      for (std::size_t j = 1; j < med.rows(); ++j) {
        double d = kernels::ops().squared_distance(x.data(), med.row(j).data(),
                                                   x.size());
        if (d < best_d) {
          best_d = d;
          best = j;
        }
      }
      labels[i] = static_cast<int>(best) + 1;
    }
  } else {
    if (!pair.cross_block)
      fail(ErrorCode::insufficient_dissimilarity,
           "nearest_medoid on dissimilarity data needs the cross block");
    const auto& d_ids = dataset_object_ids(pair.discovery);
    const Matrix& cross = *pair.cross_block;  // n1 x n2
    std::vector<std::size_t> med_rows;
    for (const auto& id : medoid_ids) med_rows.push_back(index_of(d_ids, id));
    for (std::size_t i = 0; i < v_ids.size(); ++i) {
      std::size_t best = 0;
      double best_d = cross(med_rows[0], i);
      for (std::size_t j = 1; j < med_rows.size(); ++j) {
        if (cross(med_rows[j], i) < best_d) {
          best_d = cross(med_rows[j], i);
          best = j;
        }
      }
      labels[i] = static_cast<int>(best) + 1;
    }
  }
  return Partition::create(std::move(labels), model.partition.k, v_ids);
}

Partition knn_transfer(const ClusterModel& model, const SplitPair& pair,
                       int knn_k) {
  const auto& v_ids = dataset_object_ids(pair.validation);
  std::size_t n1 = model.partition.n_objects();
  auto kk = static_cast<std::size_t>(std::min<std::size_t>(
      static_cast<std::size_t>(knn_k), n1));

  bool feature_form = is_feature(pair.validation);
  std::optional<FeatureDataset> d1m, vm;
  if (feature_form) {
    d1m = model_space(feature_or_fail(pair.discovery, "knn transfer"), model);
    vm = model_space(std::get<FeatureDataset>(pair.validation), model);
  } else if (!pair.cross_block) {
    fail(ErrorCode::insufficient_dissimilarity,
         "knn on dissimilarity data needs the cross block");
  }

  // Distances from validation object i to every discovery object.
  auto distances_to_discovery = [&](std::size_t i) {
    std::vector<double> d(n1);
    if (feature_form) {
      auto x = vm->values.row(i);
      for (std::size_t j = 0; j < n1; ++j)
        d[j] = kernels::ops().squared_distance(x.data(),
                                               d1m->values.row(j).data(),
                                               x.size());
    } else {
      for (std::size_t j = 0; j < n1; ++j) d[j] = (*pair.cross_block)(j, i);
    }
    return d;
  };

  std::vector<int> labels(v_ids.size());
  for (std::size_t i = 0; i < v_ids.size(); ++i) {
    std::vector<double> d = distances_to_discovery(i);
    std::vector<std::size_t> order(n1);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
    std::map<int, int> votes;
    for (std::size_t r = 0; r < kk; ++r)
      ++votes[model.partition.labels[order[r]]];
    int best_count = 0;
    for (const auto& [l, c] : votes) best_count = std::max(best_count, c);
    // Among tied labels, take the one owning the nearest neighbor.
    int label = 0;
    for (std::size_t r = 0; r < kk; ++r) {
      int l = model.partition.labels[order[r]];
      if (votes[l] == best_count) {
        label = l;
        break;
      }
    }
    labels[i] = label;
  }
  return Partition::create(std::move(labels), model.partition.k, v_ids);
}

}  // namespace

Partition transfer(const ClusterModel& model, const SplitPair& pair,
                   const TransferRule& rule) {
  if (rule.kind == TransferKind::identity) return identity_transfer(model, pair);
  if (pair.mode == SplitMode::descriptive)
    fail(ErrorCode::rule_mode_mismatch,
         "descriptive splits admit only the identity transfer rule");
  switch (rule.kind) {
    case TransferKind::nearest_centroid:
      return nearest_centroid_transfer(model, pair);
    case TransferKind::nearest_medoid:
      return nearest_medoid_transfer(model, pair);
    case TransferKind::knn:
      if (!rule.knn_k || *rule.knn_k < 1)
        fail(ErrorCode::invalid_data, "knn rule needs a positive knn_k");
      return knn_transfer(model, pair, *rule.knn_k);
    case TransferKind::identity:
      break;
  }
  fail(ErrorCode::invalid_data, "unknown transfer rule");
}

}  // namespace cval
