#include "cval/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cval/kernels.hpp"
#include "cval/rng.hpp"

namespace cval {
namespace {

// First-occurrence relabeling applied to labels plus any per-cluster
// payload (centroid rows, medoid ids) so they stay aligned.
struct CanonicalMap {
  std::vector<int> old_to_new;  // 1-based old label -> 1-based new label
  int k = 0;
};

CanonicalMap canonical_map(const std::vector<int>& labels, int k_old) {
  CanonicalMap cm;
  cm.old_to_new.assign(static_cast<std::size_t>(k_old) + 1, 0);
  int next = 1;
  for (int l : labels) {
    if (cm.old_to_new[static_cast<std::size_t>(l)] == 0)
      cm.old_to_new[static_cast<std::size_t>(l)] = next++;
  }
  cm.k = next - 1;
  return cm;
}

Partition apply_map(const std::vector<int>& labels, const CanonicalMap& cm,
                    const std::vector<std::string>& ids) {
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    out[i] = cm.old_to_new[static_cast<std::size_t>(labels[i])];
  return Partition::create(std::move(out), cm.k, ids);
}

double sqdist(std::span<const double> a, std::span<const double> b) {
  return kernels::ops().squared_distance(a.data(), b.data(), a.size());
}

// Index of the nearest centroid, ties toward the lowest label.
std::size_t nearest_row(std::span<const double> x, const Matrix& centers) {
  std::size_t best = 0;
  double best_d = sqdist(x, centers.row(0));
  for (std::size_t j = 1; j < centers.rows(); ++j) {
    double d = sqdist(x, centers.row(j));
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

Matrix kmeanspp_init(const Matrix& x, std::size_t k, Rng& rng) {
  std::size_t n = x.rows();
  Matrix centers(k, x.cols());
  std::vector<double> min_d(n, std::numeric_limits<double>::infinity());
  std::size_t first = static_cast<std::size_t>(rng.uniform_index(n));
  std::copy(x.row(first).begin(), x.row(first).end(), centers.row(0).begin());
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double d = sqdist(x.row(i), centers.row(c - 1));
      if (d < min_d[i]) min_d[i] = d;
      total += min_d[i];
    }
    std::size_t pick;
    if (total > 0.0) {
      double target = rng.uniform01() * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += min_d[i];
        if (acc > target) {
          pick = i;
          break;
        }
      }
    } else {
      // All remaining points coincide with chosen centers.
      pick = static_cast<std::size_t>(rng.uniform_index(n));
    }
    std::copy(x.row(pick).begin(), x.row(pick).end(), centers.row(c).begin());
  }
  return centers;
}

struct LloydResult {
  std::vector<int> labels;  // 1-based
  Matrix centers;
  double wss = 0.0;
};

LloydResult lloyd(const Matrix& x, Matrix centers, int max_iter) {
  std::size_t n = x.rows(), p = x.cols(), k = centers.rows();
  std::vector<int> assign(n, -1);
  std::vector<std::size_t> sizes(k, 0);
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int a = static_cast<int>(nearest_row(x.row(i), centers));
      if (a != assign[i]) {
        assign[i] = a;
        changed = true;
      }
    }
    std::fill(sizes.begin(), sizes.end(), 0);
    for (int a : assign) ++sizes[static_cast<std::size_t>(a)];
    // An empty cluster grabs the point farthest from its own centroid.
    for (std::size_t j = 0; j < k; ++j) {
      if (sizes[j] > 0) continue;
      double far_d = -1.0;
      std::size_t far_i = 0;
      for (std::size_t i = 0; i < n; ++i) {
        auto a = static_cast<std::size_t>(assign[i]);
        if (sizes[a] <= 1) continue;
        double d = sqdist(x.row(i), centers.row(a));
        if (d > far_d) {
          far_d = d;
          far_i = i;
        }
      }
      --sizes[static_cast<std::size_t>(assign[far_i])];
      assign[far_i] = static_cast<int>(j);
      sizes[j] = 1;
      changed = true;
    }
    Matrix next(k, p, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      kernels::ops().accumulate(next.row(static_cast<std::size_t>(assign[i])).data(),
                                x.row(i).data(), p);
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t c = 0; c < p; ++c)
        next(j, c) /= static_cast<double>(sizes[j]);
    centers = std::move(next);
    if (!changed && it > 0) break;
  }
  LloydResult r;
  r.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    r.labels[i] = assign[i] + 1;
    r.wss += sqdist(x.row(i), centers.row(static_cast<std::size_t>(assign[i])));
  }
  r.centers = std::move(centers);
  return r;
}

struct PreprocessedFeatures {
  FeatureDataset data;
  std::optional<StandardizationParams> params;
};

PreprocessedFeatures preprocess(const FeatureDataset& data,
                                const ClusteringMethod& method) {
  if (method.preprocessing == Preprocessing::standardize) {
    auto sd = standardize(data);
    return {std::move(sd.data), std::move(sd.params)};
  }
  return {data, std::nullopt};
}

}  // namespace

ClusterModel kmeans(const FeatureDataset& data, const ClusteringMethod& method) {
  method.validate();
  if (method.algorithm != Algorithm::kmeans)
    fail(ErrorCode::invalid_data, "kmeans() called with non-kmeans method");
  auto n = data.n_objects();
  auto k = static_cast<std::size_t>(method.k);
  if (k > n) fail(ErrorCode::invalid_k, "k exceeds number of objects");

  PreprocessedFeatures pre = preprocess(data, method);
  const Matrix& x = pre.data.values;

  LloydResult best;
  bool have_best = false;
  // Restarts are keyed on their index, so results are identical however
  // they are scheduled.
  for (int r = 0; r < *method.n_restarts; ++r) {
    Rng rng = Rng::substream(*method.seed, static_cast<std::uint64_t>(r));
    LloydResult res = lloyd(x, kmeanspp_init(x, k, rng), *method.max_iter);
    if (!have_best || res.wss < best.wss) {
      best = std::move(res);
      have_best = true;
    }
  }

  CanonicalMap cm = canonical_map(best.labels, static_cast<int>(k));
  Matrix centroids(k, x.cols());
  for (std::size_t j = 0; j < k; ++j) {
    auto nj = static_cast<std::size_t>(cm.old_to_new[j + 1] - 1);
    std::copy(best.centers.row(j).begin(), best.centers.row(j).end(),
              centroids.row(nj).begin());
  }

  ClusterModel model;
  model.method = method;
  model.partition = apply_map(best.labels, cm, data.object_ids);
  model.centroids = std::move(centroids);
  model.standardization = std::move(pre.params);
  model.objective = best.wss;
  return model;
}

namespace {

struct Agglomeration {
  std::vector<ClusterModel::Merge> trace;
  std::vector<int> labels_at_k;  // 1-based
};

// Naive O(n^3) agglomeration. Ties in merge height break toward the
// smallest pair of representative indices (scan order guarantees this).
Agglomeration agglomerate(const Matrix& diss, std::size_t k, Linkage linkage) {
  std::size_t n = diss.rows();
  Matrix d = diss;
  std::vector<bool> active(n, true);
  std::vector<std::size_t> size(n, 1);
  std::vector<std::vector<std::size_t>> members(n);
  for (std::size_t i = 0; i < n; ++i) members[i] = {i};

  Agglomeration out;
  out.labels_at_k.assign(n, 0);
  std::size_t n_active = n;
  auto snapshot = [&] {
    int label = 1;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t m : members[i]) out.labels_at_k[m] = label;
      ++label;
    }
  };
  if (n_active == k) snapshot();

  while (n_active > 1) {
    double best_h = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!active[j]) continue;
        if (d(i, j) < best_h) {
          best_h = d(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    out.trace.push_back({static_cast<int>(bi), static_cast<int>(bj), best_h});
    for (std::size_t o = 0; o < n; ++o) {
      if (!active[o] || o == bi || o == bj) continue;
      double dio = d(bi, o), djo = d(bj, o);
      double v;
      switch (linkage) {
        case Linkage::single: v = std::min(dio, djo); break;
        case Linkage::complete: v = std::max(dio, djo); break;
        case Linkage::average:
          v = (static_cast<double>(size[bi]) * dio +
               static_cast<double>(size[bj]) * djo) /
              static_cast<double>(size[bi] + size[bj]);
          break;
        default: v = std::min(dio, djo);
      }
      d(bi, o) = v;
      d(o, bi) = v;
    }
    active[bj] = false;
    size[bi] += size[bj];
    members[bi].insert(members[bi].end(), members[bj].begin(),
                       members[bj].end());
    members[bj].clear();
    --n_active;
    if (n_active == k) snapshot();
  }
  return out;
}

DissimilarityDataset to_dissimilarity(const Dataset& data,
                                      const ClusteringMethod& method,
                                      std::optional<StandardizationParams>* sp) {
  if (is_feature(data)) {
    PreprocessedFeatures pre =
        preprocess(std::get<FeatureDataset>(data), method);
    if (sp) *sp = std::move(pre.params);
    return euclidean_dissimilarity(pre.data);
  }
  return std::get<DissimilarityDataset>(data);
}

}  // namespace

ClusterModel hierarchical(const Dataset& data, const ClusteringMethod& method) {
  method.validate();
  if (method.algorithm != Algorithm::hierarchical)
    fail(ErrorCode::invalid_data, "hierarchical() called with wrong method");
  std::optional<StandardizationParams> sp;
  DissimilarityDataset diss = to_dissimilarity(data, method, &sp);
  std::size_t n = diss.n_objects();
  auto k = static_cast<std::size_t>(method.k);
  if (k > n) fail(ErrorCode::invalid_k, "k exceeds number of objects");

  Agglomeration agg = agglomerate(diss.d, k, *method.linkage);
  CanonicalMap cm = canonical_map(agg.labels_at_k, static_cast<int>(k));

  ClusterModel model;
  model.method = method;
  model.partition = apply_map(agg.labels_at_k, cm, diss.object_ids);
  model.merge_trace = std::move(agg.trace);
  model.standardization = std::move(sp);
  return model;
}

namespace {

double total_cost(const Matrix& d, const std::vector<std::size_t>& medoids) {
  double cost = 0.0;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t m : medoids) best = std::min(best, d(i, m));
    cost += best;
  }
  return cost;
}

}  // namespace

ClusterModel pam(const DissimilarityDataset& data,
                 const ClusteringMethod& method) {
  method.validate();
  if (method.algorithm != Algorithm::pam)
    fail(ErrorCode::invalid_data, "pam() called with non-pam method");
  std::size_t n = data.n_objects();
  auto k = static_cast<std::size_t>(method.k);
  if (k > n) fail(ErrorCode::invalid_k, "k exceeds number of objects");
  const Matrix& d = data.d;

  // BUILD: greedy cost reduction, ties toward the lowest object index.
  std::vector<std::size_t> medoids;
  std::vector<bool> is_medoid(n, false);
  {
    std::size_t best_i = 0;
    double best_c = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      double c = kernels::ops().sum(d.row(i).data(), n);
      if (c < best_c) {
        best_c = c;
        best_i = i;
      }
    }
    medoids.push_back(best_i);
    is_medoid[best_i] = true;
  }
  std::vector<double> nearest(n);
  auto refresh_nearest = [&] {
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t m : medoids) best = std::min(best, d(i, m));
      nearest[i] = best;
    }
  };
  refresh_nearest();
  while (medoids.size() < k) {
    std::size_t best_i = 0;
    double best_gain = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (is_medoid[i]) continue;
      double gain = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        gain += std::max(0.0, nearest[j] - d(j, i));
      if (gain > best_gain) {
        best_gain = gain;
        best_i = i;
      }
    }
    medoids.push_back(best_i);
    is_medoid[best_i] = true;
    refresh_nearest();
  }

  // SWAP: steepest descent, ties toward the lowest (medoid, candidate).
  double cost = total_cost(d, medoids);
  for (;;) {
    double best_cost = cost;
    std::size_t best_m = 0, best_h = 0;
    bool found = false;
    for (std::size_t mi = 0; mi < medoids.size(); ++mi) {
      for (std::size_t h = 0; h < n; ++h) {
        if (is_medoid[h]) continue;
        std::size_t saved = medoids[mi];
        medoids[mi] = h;
        double c = total_cost(d, medoids);
        medoids[mi] = saved;
        if (c < best_cost) {
          best_cost = c;
          best_m = mi;
          best_h = h;
          found = true;
        }
      }
    }
    if (!found) break;
    is_medoid[medoids[best_m]] = false;
    medoids[best_m] = best_h;
    is_medoid[best_h] = true;
    cost = best_cost;
  }

  std::sort(medoids.begin(), medoids.end());
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best_j = 0;
    double best = d(i, medoids[0]);
    for (std::size_t j = 1; j < medoids.size(); ++j) {
      if (d(i, medoids[j]) < best) {
        best = d(i, medoids[j]);
        best_j = j;
      }
    }
    labels[i] = static_cast<int>(best_j) + 1;
  }

  CanonicalMap cm = canonical_map(labels, static_cast<int>(k));
  std::vector<std::string> medoid_ids(k);
  for (std::size_t j = 0; j < k; ++j)
    medoid_ids[static_cast<std::size_t>(cm.old_to_new[j + 1] - 1)] =
        data.object_ids[medoids[j]];

  ClusterModel model;
  model.method = method;
  model.partition = apply_map(labels, cm, data.object_ids);
  model.medoid_ids = std::move(medoid_ids);
  model.objective = cost;
  return model;
}

ClusterModel apply_method(const Dataset& data, const ClusteringMethod& method) {
  method.validate();
  switch (method.algorithm) {
    case Algorithm::kmeans:
      if (!is_feature(data))
        fail(ErrorCode::unsupported_mode, "kmeans requires feature data");
      return kmeans(std::get<FeatureDataset>(data), method);
    case Algorithm::hierarchical:
      return hierarchical(data, method);
    case Algorithm::pam: {
      if (is_feature(data)) {
        std::optional<StandardizationParams> sp;
        DissimilarityDataset diss = to_dissimilarity(data, method, &sp);
        ClusterModel m = pam(diss, method);
        const auto& f = std::get<FeatureDataset>(data);
        FeatureDataset work = sp ? apply_standardization(f, *sp) : f;
        Matrix coords(m.medoid_ids->size(), work.n_variables());
        for (std::size_t j = 0; j < m.medoid_ids->size(); ++j) {
          auto it = std::find(work.object_ids.begin(), work.object_ids.end(),
                              (*m.medoid_ids)[j]);
          auto r = work.values.row(
              static_cast<std::size_t>(it - work.object_ids.begin()));
          std::copy(r.begin(), r.end(), coords.row(j).begin());
        }
        m.medoid_coords = std::move(coords);
        m.standardization = std::move(sp);
        return m;
      }
      return pam(std::get<DissimilarityDataset>(data), method);
    }
  }
  fail(ErrorCode::invalid_data, "unknown algorithm");
}

ClusterModel external_model(Partition partition,
                            std::optional<Matrix> centroids,
                            std::optional<std::vector<std::string>> medoid_ids) {
  ClusterModel m;
  m.method.algorithm = Algorithm::kmeans;  // placeholder spec; not rerunnable
  m.method.k = partition.k;
  m.method.seed = 0;
  m.method.max_iter = 1;
  m.method.n_restarts = 1;
  m.partition = canonicalize(partition);
  m.centroids = std::move(centroids);
  m.medoid_ids = std::move(medoid_ids);
  return m;
}

}  // namespace cval
