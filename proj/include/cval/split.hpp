#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "cval/core.hpp"

namespace cval {

using Dataset = std::variant<FeatureDataset, DissimilarityDataset>;

inline bool is_feature(const Dataset& d) {
  return std::holds_alternative<FeatureDataset>(d);
}
inline const std::vector<std::string>& dataset_object_ids(const Dataset& d) {
  return std::visit([](const auto& x) -> const std::vector<std::string>& {
    return x.object_ids;
  }, d);
}
std::uint64_t dataset_hash(const Dataset& d);

enum class SplitMode { inferential, descriptive };
std::string to_string(SplitMode m);
SplitMode split_mode_from_string(const std::string& s);

// Sealed discovery/validation pair. For inferential dissimilarity splits
// cross_block keeps the original between-part dissimilarities (n1 x n2),
// which the transfer rules need later.
struct SplitPair {
  Dataset discovery;
  Dataset validation;
  SplitMode mode = SplitMode::inferential;
  double ratio = 0.5;
  std::uint64_t seed = 0;
  std::optional<Matrix> cross_block;
};

// Split along the objects. The seeded permutation runs over the sorted
// object-id list, so membership does not depend on file row order.
// Optional strata: per-stratum ceil(ratio * n_stratum) to discovery.
SplitPair split_inferential(
    const Dataset& data, double ratio, std::uint64_t seed,
    const std::unordered_map<std::string, std::string>* strata = nullptr);

// Split along the variables; object set identical on both sides.
SplitPair split_descriptive(const Dataset& data, double ratio,
                            std::uint64_t seed);

// Pair two independently collected files; verifies schema compatibility
// and realigns columns (inferential) or rows (descriptive) by id.
SplitPair ingest_pair(const Dataset& discovery, const Dataset& validation,
                      SplitMode mode);

}  // namespace cval
