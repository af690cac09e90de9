#pragma once

#include <array>
#include <string>
#include <vector>

#include "cval/core.hpp"
#include "cval/rng.hpp"

namespace cval::testing {

inline std::vector<std::string> make_ids(std::size_t n,
                                         const std::string& prefix = "o") {
  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = prefix + std::to_string(i + 1);
  return ids;
}

inline std::vector<std::string> make_vars(std::size_t p) {
  std::vector<std::string> ids(p);
  for (std::size_t j = 0; j < p; ++j) ids[j] = "v" + std::to_string(j + 1);
  return ids;
}

inline FeatureDataset make_feature(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return FeatureDataset::create(std::move(m), make_ids(rows.size()),
                                make_vars(rows.empty() ? 0 : rows[0].size()));
}

// Gaussian blobs, one per center, n_per objects each, unit SD.
inline FeatureDataset make_blobs(const std::vector<std::vector<double>>& centers,
                                 std::size_t n_per, std::uint64_t seed,
                                 double sd = 1.0) {
  std::size_t p = centers[0].size();
  std::size_t n = centers.size() * n_per;
  Matrix m(n, p);
  Rng rng(seed);
  std::size_t r = 0;
  for (const auto& c : centers)
    for (std::size_t i = 0; i < n_per; ++i, ++r)
      for (std::size_t j = 0; j < p; ++j)
        m(r, j) = c[j] + sd * rng.normal();
  return FeatureDataset::create(std::move(m), make_ids(n), make_vars(p));
}

inline FeatureDataset make_uniform(std::size_t n, std::size_t p,
                                   std::uint64_t seed, double lo = 0.0,
                                   double hi = 1.0) {
  Matrix m(n, p);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) m(i, j) = rng.uniform(lo, hi);
  return FeatureDataset::create(std::move(m), make_ids(n), make_vars(p));
}

// Random partition with every cluster nonempty.
inline Partition random_partition(Rng& rng, std::size_t n, int k) {
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i)
    labels[i] = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(k))) + 1;
  for (int c = 0; c < k; ++c) labels[static_cast<std::size_t>(c)] = c + 1;
  rng.shuffle(labels);
  return Partition::create(std::move(labels), k, make_ids(n));
}

// Pair-count oracle by explicit enumeration of all object pairs.
struct PairCounts {
  long long a = 0, b = 0, c = 0, d = 0;
};

inline PairCounts enumerate_pairs(const Partition& p1, const Partition& p2) {
  PairCounts pc;
  std::size_t n = p1.labels.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      bool same1 = p1.labels[i] == p1.labels[j];
      bool same2 = p2.labels[i] == p2.labels[j];
      if (same1 && same2) ++pc.a;
      else if (same1) ++pc.b;
      else if (same2) ++pc.c;
      else ++pc.d;
    }
  return pc;
}

}  // namespace cval::testing
