#include "cval/indices.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "cval/kernels.hpp"
#include "cval/stats.hpp"

namespace cval {

std::string to_string(Direction d) {
  return d == Direction::higher_better ? "higher_better" : "lower_better";
}

std::vector<double> silhouette_values(const DissimilarityDataset& data,
                                      const Partition& p) {
  if (data.object_ids != p.object_ids)
    fail(ErrorCode::mismatched_objects,
         "partition and dissimilarities cover different objects");
  std::size_t n = p.n_objects();
  auto k = static_cast<std::size_t>(p.k);
  auto sizes = p.cluster_sizes();
  std::vector<double> s(n, 0.0);
  std::vector<double> to_cluster(k);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(to_cluster.begin(), to_cluster.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j)
      to_cluster[static_cast<std::size_t>(p.labels[j] - 1)] += data.d(i, j);
    auto own = static_cast<std::size_t>(p.labels[i] - 1);
    if (sizes[own] <= 1) continue;  // singleton convention s = 0
    double a = to_cluster[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      if (c == own || sizes[c] == 0) continue;
      b = std::min(b, to_cluster[c] / static_cast<double>(sizes[c]));
    }
    double m = std::max(a, b);
    s[i] = m > 0.0 ? (b - a) / m : 0.0;
  }
  return s;
}

IndexValue avg_silhouette_width(const DissimilarityDataset& data,
                                const Partition& p) {
  if (p.k < 2)
    fail(ErrorCode::undefined_index, "silhouette needs at least 2 clusters");
  if (p.n_objects() < 3)
    fail(ErrorCode::undefined_index, "silhouette needs at least 3 objects");
  auto s = silhouette_values(data, p);
  IndexValue out;
  out.name = "asw";
  out.direction = Direction::higher_better;
  out.value = kernels::ops().sum(s.data(), s.size()) /
              static_cast<double>(s.size());
  auto sizes = p.cluster_sizes();
  std::vector<double> per(static_cast<std::size_t>(p.k), 0.0);
  for (std::size_t i = 0; i < s.size(); ++i)
    per[static_cast<std::size_t>(p.labels[i] - 1)] += s[i];
  for (int c = 0; c < p.k; ++c)
    out.per_cluster.emplace_back(
        c + 1, per[static_cast<std::size_t>(c)] /
                   static_cast<double>(sizes[static_cast<std::size_t>(c)]));
  return out;
}

IndexValue calinski_harabasz(const FeatureDataset& data, const Partition& p) {
  if (data.object_ids != p.object_ids)
    fail(ErrorCode::mismatched_objects,
         "partition and features cover different objects");
  auto n = data.n_objects();
  auto k = static_cast<std::size_t>(p.k);
  if (p.k < 2 || k > n - 1)
    fail(ErrorCode::undefined_index, "calinski-harabasz needs 2 <= k <= n-1");
  std::size_t d = data.n_variables();
  auto sizes = p.cluster_sizes();

  Matrix centroids(k, d, 0.0);
  std::vector<double> overall(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto c = static_cast<std::size_t>(p.labels[i] - 1);
    kernels::ops().accumulate(centroids.row(c).data(), data.values.row(i).data(), d);
    kernels::ops().accumulate(overall.data(), data.values.row(i).data(), d);
  }
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t j = 0; j < d; ++j)
      centroids(c, j) /= static_cast<double>(sizes[c]);
  for (std::size_t j = 0; j < d; ++j) overall[j] /= static_cast<double>(n);

  double between = 0.0;
  for (std::size_t c = 0; c < k; ++c)
    between += static_cast<double>(sizes[c]) *
               kernels::ops().squared_distance(centroids.row(c).data(),
                                               overall.data(), d);
  double within = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto c = static_cast<std::size_t>(p.labels[i] - 1);
    within += kernels::ops().squared_distance(data.values.row(i).data(),
                                              centroids.row(c).data(), d);
  }

  IndexValue out;
  out.name = "ch";
  out.direction = Direction::higher_better;
  if (within == 0.0) {
    out.value = std::numeric_limits<double>::infinity();
    out.degenerate = true;
    out.note = "zero within-cluster scatter";
  } else {
    out.value = (between / static_cast<double>(p.k - 1)) /
                (within / static_cast<double>(n - k));
  }
  return out;
}

std::pair<IndexValue, IndexValue> homogeneity_and_separation(
    const DissimilarityDataset& data, const Partition& p) {
  if (data.object_ids != p.object_ids)
    fail(ErrorCode::mismatched_objects,
         "partition and dissimilarities cover different objects");
  if (p.k < 2)
    fail(ErrorCode::undefined_index,
         "homogeneity/separation need at least 2 clusters");
  std::size_t n = p.n_objects();
  auto k = static_cast<std::size_t>(p.k);

  std::vector<double> within_sum(k, 0.0);
  std::vector<long long> within_pairs(k, 0);
  double between_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (p.labels[i] == p.labels[j]) {
        auto c = static_cast<std::size_t>(p.labels[i] - 1);
        within_sum[c] += data.d(i, j);
        ++within_pairs[c];
      } else {
        between_min = std::min(between_min, data.d(i, j));
      }
    }
  }

  IndexValue hom;
  hom.name = "homogeneity";
  hom.direction = Direction::lower_better;
  double total = 0.0;
  long long pairs = 0;
  for (std::size_t c = 0; c < k; ++c) {
    // Empty-average convention: singleton clusters score 0.
    double v = within_pairs[c] > 0
                   ? within_sum[c] / static_cast<double>(within_pairs[c])
                   : 0.0;
    hom.per_cluster.emplace_back(static_cast<int>(c) + 1, v);
    total += within_sum[c];
    pairs += within_pairs[c];
  }
  hom.value = pairs > 0 ? total / static_cast<double>(pairs) : 0.0;

  IndexValue sep;
  sep.name = "separation";
  sep.direction = Direction::higher_better;
  sep.value = between_min;
  // Per-cluster separation: min dissimilarity to any object outside.
  std::vector<double> per_sep(k, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (p.labels[i] == p.labels[j]) continue;
      auto c = static_cast<std::size_t>(p.labels[i] - 1);
      per_sep[c] = std::min(per_sep[c], data.d(i, j));
    }
  for (std::size_t c = 0; c < k; ++c)
    sep.per_cluster.emplace_back(static_cast<int>(c) + 1, per_sep[c]);
  return {hom, sep};
}

IndexValue cluster_size_profile(const Partition& p) {
  auto sizes = p.cluster_sizes();
  std::vector<std::pair<int, double>> shares;
  for (std::size_t c = 0; c < sizes.size(); ++c)
    shares.emplace_back(static_cast<int>(c) + 1,
                        static_cast<double>(sizes[c]) /
                            static_cast<double>(p.n_objects()));
  std::stable_sort(shares.begin(), shares.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  IndexValue out;
  out.name = "size_profile";
  out.direction = Direction::higher_better;
  out.per_cluster = std::move(shares);
  out.value = out.per_cluster.front().second;
  return out;
}

namespace {

struct PairCounts {
  double together_both = 0.0;   // a
  double together_first = 0.0;  // b
  double together_second = 0.0; // c
  double apart_both = 0.0;      // d
  double total = 0.0;
};

double choose2(double x) { return x * (x - 1.0) / 2.0; }

PairCounts pair_counts(const Partition& p1, const Partition& p2) {
  auto table = contingency_table(p1, p2);
  double n = static_cast<double>(p1.n_objects());
  double sum_nij2 = 0.0, sum_ai2 = 0.0, sum_bj2 = 0.0;
  std::vector<double> col_sums(static_cast<std::size_t>(p2.k), 0.0);
  for (std::size_t i = 0; i < table.size(); ++i) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < table[i].size(); ++j) {
      double nij = static_cast<double>(table[i][j]);
      sum_nij2 += choose2(nij);
      row_sum += nij;
      col_sums[j] += nij;
    }
    sum_ai2 += choose2(row_sum);
  }
  for (double cs : col_sums) sum_bj2 += choose2(cs);
  PairCounts pc;
  pc.total = choose2(n);
  pc.together_both = sum_nij2;
  pc.together_first = sum_ai2 - sum_nij2;
  pc.together_second = sum_bj2 - sum_nij2;
  pc.apart_both = pc.total - sum_ai2 - sum_bj2 + sum_nij2;
  return pc;
}

IndexValue make_sim(std::string name, double value) {
  IndexValue out;
  out.name = std::move(name);
  out.direction = Direction::higher_better;
  out.value = value;
  return out;
}

}  // namespace

IndexValue rand_index(const Partition& p1, const Partition& p2) {
  PairCounts pc = pair_counts(p1, p2);
  return make_sim("rand", (pc.together_both + pc.apart_both) / pc.total);
}

IndexValue adjusted_rand(const Partition& p1, const Partition& p2) {
  auto table = contingency_table(p1, p2);
  double n = static_cast<double>(p1.n_objects());
  double sum_nij2 = 0.0, sum_ai2 = 0.0, sum_bj2 = 0.0;
  std::vector<double> col_sums(static_cast<std::size_t>(p2.k), 0.0);
  for (const auto& row : table) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      sum_nij2 += choose2(static_cast<double>(row[j]));
      row_sum += static_cast<double>(row[j]);
      col_sums[j] += static_cast<double>(row[j]);
    }
    sum_ai2 += choose2(row_sum);
  }
  for (double cs : col_sums) sum_bj2 += choose2(cs);
  double expected = sum_ai2 * sum_bj2 / choose2(n);
  double maximum = 0.5 * (sum_ai2 + sum_bj2);
  double denom = maximum - expected;
  // Both partitions trivial (all-one-cluster or all-singletons): the
  // identical-partition limit is 1.
  double value = denom == 0.0 ? 1.0 : (sum_nij2 - expected) / denom;
  return make_sim("ari", value);
}

IndexValue jaccard(const Partition& p1, const Partition& p2) {
  PairCounts pc = pair_counts(p1, p2);
  double denom = pc.together_both + pc.together_first + pc.together_second;
  return make_sim("jaccard", denom == 0.0 ? 1.0 : pc.together_both / denom);
}

IndexValue fowlkes_mallows(const Partition& p1, const Partition& p2) {
  if (p1.n_objects() < 2)
    fail(ErrorCode::undefined_index, "fowlkes-mallows needs >= 2 objects");
  PairCounts pc = pair_counts(p1, p2);
  double d1 = pc.together_both + pc.together_first;
  double d2 = pc.together_both + pc.together_second;
  double value;
  if (pc.together_both == 0.0)
    value = (pc.together_first == 0.0 && pc.together_second == 0.0) ? 1.0 : 0.0;
  else
    value = pc.together_both / std::sqrt(d1 * d2);
  return make_sim("fm", value);
}

AssociationTest chi_square_association(const Partition& p,
                                       const std::vector<std::string>& v) {
  if (v.size() != p.n_objects())
    fail(ErrorCode::mismatched_objects,
         "external variable length does not match partition");
  std::map<std::string, std::size_t> cat_index;
  for (const auto& s : v) cat_index.emplace(s, cat_index.size());
  std::size_t m = cat_index.size();
  if (m < 2)
    fail(ErrorCode::undefined_test,
         "chi-square needs at least 2 categories in the external variable");
  auto k = static_cast<std::size_t>(p.k);

  Matrix observed(k, m, 0.0);
  for (std::size_t i = 0; i < v.size(); ++i)
    observed(static_cast<std::size_t>(p.labels[i] - 1),
             cat_index.find(v[i])->second) += 1.0;
  double n = static_cast<double>(v.size());
  std::vector<double> row_tot(k, 0.0), col_tot(m, 0.0);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      row_tot[i] += observed(i, j);
      col_tot[j] += observed(i, j);
    }
  double stat = 0.0;
  bool low_expected = false;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double e = row_tot[i] * col_tot[j] / n;
      if (e < 5.0) low_expected = true;
      if (e > 0.0) {
        double diff = observed(i, j) - e;
        stat += diff * diff / e;
      }
    }

  AssociationTest t;
  t.name = "chi_square";
  t.statistic = stat;
  t.df1 = static_cast<double>((k - 1) * (m - 1));
  t.p_value = stats::chi_square_sf(stat, t.df1);
  if (low_expected)
    t.warning = "expected cell count below 5; chi-square approximation weak";
  return t;
}

AssociationTest anova_f_association(const Partition& p,
                                    const std::vector<double>& v) {
  if (v.size() != p.n_objects())
    fail(ErrorCode::mismatched_objects,
         "external variable length does not match partition");
  if (p.k < 2) fail(ErrorCode::undefined_test, "anova needs k >= 2");
  auto n = v.size();
  auto k = static_cast<std::size_t>(p.k);
  if (n <= k) fail(ErrorCode::undefined_test, "anova needs n > k");
  auto sizes = p.cluster_sizes();
  for (auto s : sizes)
    if (s == 0) fail(ErrorCode::undefined_test, "anova needs nonempty clusters");

  std::vector<double> group_sum(k, 0.0);
  double grand = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    group_sum[static_cast<std::size_t>(p.labels[i] - 1)] += v[i];
    grand += v[i];
  }
  double grand_mean = grand / static_cast<double>(n);
  double ssb = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    double gm = group_sum[c] / static_cast<double>(sizes[c]);
    ssb += static_cast<double>(sizes[c]) * (gm - grand_mean) * (gm - grand_mean);
  }
  double ssw = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto c = static_cast<std::size_t>(p.labels[i] - 1);
    double gm = group_sum[c] / static_cast<double>(sizes[c]);
    ssw += (v[i] - gm) * (v[i] - gm);
  }

  AssociationTest t;
  t.name = "anova_f";
  t.df1 = static_cast<double>(k - 1);
  t.df2 = static_cast<double>(n - k);
  if (ssw == 0.0 && ssb == 0.0) {
    t.degenerate = true;
    t.statistic = std::numeric_limits<double>::quiet_NaN();
    t.p_value = std::numeric_limits<double>::quiet_NaN();
    t.warning = "zero within- and between-group variance";
    return t;
  }
  if (ssw == 0.0) {
    t.degenerate = true;
    t.statistic = std::numeric_limits<double>::infinity();
    t.p_value = 0.0;
    t.warning = "zero within-group variance";
    return t;
  }
  t.statistic = (ssb / t.df1) / (ssw / t.df2);
  t.p_value = stats::f_sf(t.statistic, t.df1, t.df2);
  return t;
}

}  // namespace cval
