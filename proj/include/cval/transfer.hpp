#pragma once

#include <optional>

#include "cval/cluster.hpp"
#include "cval/split.hpp"

namespace cval {

enum class TransferKind { nearest_centroid, nearest_medoid, knn, identity };
std::string to_string(TransferKind k);
TransferKind transfer_kind_from_string(const std::string& s);

// The supervised classifier used to carry C1 onto the validation data.
struct TransferRule {
  TransferKind kind = TransferKind::nearest_centroid;
  std::optional<int> knn_k;  // present iff kind == knn
};

// Picks the classifier that mirrors the method's own assignment rule.
// Descriptive mode always yields identity (the objects are the same).
TransferRule default_rule(const ClusteringMethod& method, SplitMode mode);

// Labels every validation object with a cluster of C1. Cluster j of the
// result corresponds to cluster j of C1; clusters that receive no
// validation object stay empty rather than being renumbered.
Partition transfer(const ClusterModel& model, const SplitPair& pair,
                   const TransferRule& rule);

}  // namespace cval
