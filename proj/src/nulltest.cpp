#include "cval/nulltest.hpp"

#include <algorithm>
#include <cmath>

#include "cval/rng.hpp"
#include "cval/transfer.hpp"

namespace cval {

std::string to_string(NullKind k) {
  return k == NullKind::uniform_range ? "uniform" : "gaussian";
}

NullKind null_kind_from_string(const std::string& s) {
  if (s == "uniform" || s == "uniform_range") return NullKind::uniform_range;
  if (s == "gaussian" || s == "gaussian_moments") return NullKind::gaussian_moments;
  fail(ErrorCode::invalid_data, "unknown null model: " + s);
}

namespace {

// In-place Cholesky of a symmetric positive-definite matrix; returns
// false when a pivot fails.
bool cholesky(Matrix& a) {
  std::size_t p = a.rows();
  for (std::size_t j = 0; j < p; ++j) {
    double sum = a(j, j);
    for (std::size_t s = 0; s < j; ++s) sum -= a(j, s) * a(j, s);
    if (sum <= 0.0) return false;
    a(j, j) = std::sqrt(sum);
    for (std::size_t i = j + 1; i < p; ++i) {
      double v = a(i, j);
      for (std::size_t s = 0; s < j; ++s) v -= a(i, s) * a(j, s);
      a(i, j) = v / a(j, j);
    }
  }
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j) a(i, j) = 0.0;
  return true;
}

}  // namespace

NullModel fit_null(const FeatureDataset& data, NullKind kind) {
  NullModel m;
  m.kind = kind;
  m.n_objects = data.n_objects();
  m.variable_ids = data.variable_ids;
  std::size_t n = data.n_objects(), p = data.n_variables();

  if (kind == NullKind::uniform_range) {
    m.lo.assign(p, std::numeric_limits<double>::infinity());
    m.hi.assign(p, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < p; ++j) {
        m.lo[j] = std::min(m.lo[j], data.values(i, j));
        m.hi[j] = std::max(m.hi[j], data.values(i, j));
      }
    return m;
  }

  m.mean.assign(p, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) m.mean[j] += data.values(i, j);
  for (std::size_t j = 0; j < p; ++j) m.mean[j] /= static_cast<double>(n);

  Matrix cov(p, p, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < p; ++a) {
      double ca = data.values(i, a) - m.mean[a];
      for (std::size_t b = a; b < p; ++b)
        cov(a, b) += ca * (data.values(i, b) - m.mean[b]);
    }
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = a; b < p; ++b) {
      cov(a, b) /= static_cast<double>(n - 1);
      cov(b, a) = cov(a, b);
    }

  Matrix chol = cov;
  if (!cholesky(chol)) {
    double trace = 0.0;
    for (std::size_t j = 0; j < p; ++j) trace += cov(j, j);
    double ridge = 1e-8 * trace / static_cast<double>(p);
    if (ridge <= 0.0) ridge = 1e-12;
    chol = cov;
    for (std::size_t j = 0; j < p; ++j) chol(j, j) += ridge;
    while (!cholesky(chol)) {
      ridge *= 10.0;
      chol = cov;
      for (std::size_t j = 0; j < p; ++j) chol(j, j) += ridge;
    }
    m.ridged = true;
  }
  m.chol = std::move(chol);
  return m;
}

FeatureDataset simulate(const NullModel& model, std::uint64_t seed) {
  return simulate(model, model.n_objects, seed);
}

FeatureDataset simulate(const NullModel& model, std::size_t n_rows,
                        std::uint64_t seed) {
  std::size_t p = model.variable_ids.size();
  Matrix values(n_rows, p);
  Rng rng(seed);
  if (model.kind == NullKind::uniform_range) {
    for (std::size_t i = 0; i < n_rows; ++i)
      for (std::size_t j = 0; j < p; ++j)
        values(i, j) = rng.uniform(model.lo[j], model.hi[j]);
  } else {
    std::vector<double> z(p);
    for (std::size_t i = 0; i < n_rows; ++i) {
      for (std::size_t j = 0; j < p; ++j) z[j] = rng.normal();
      for (std::size_t a = 0; a < p; ++a) {
        double v = model.mean[a];
        for (std::size_t b = 0; b <= a; ++b) v += model.chol(a, b) * z[b];
        values(i, a) = v;
      }
    }
  }
  std::vector<std::string> ids(n_rows);
  for (std::size_t i = 0; i < n_rows; ++i) ids[i] = "sim" + std::to_string(i + 1);
  return FeatureDataset::create(std::move(values), std::move(ids),
                                model.variable_ids);
}

double add_one_p_value(double t_observed, const std::vector<double>& t_null,
                       Direction direction) {
  long long exceed = 0;
  for (double t : t_null) {
    bool extreme = direction == Direction::higher_better ? t >= t_observed
                                                         : t <= t_observed;
    if (extreme) ++exceed;
  }
  return static_cast<double>(exceed + 1) /
         static_cast<double>(t_null.size() + 1);
}

ClusterStatistic cluster_statistic(const std::string& name) {
  if (name == "asw")
    return {"asw", Direction::higher_better,
            [](const FeatureDataset& d, const Partition& p) {
              return avg_silhouette_width(euclidean_dissimilarity(d), p).value;
            }};
  if (name == "ch")
    return {"ch", Direction::higher_better,
            [](const FeatureDataset& d, const Partition& p) {
              return calinski_harabasz(d, p).value;
            }};
  if (name == "homogeneity")
    return {"homogeneity", Direction::lower_better,
            [](const FeatureDataset& d, const Partition& p) {
              return homogeneity_and_separation(euclidean_dissimilarity(d), p)
                  .first.value;
            }};
  if (name == "separation")
    return {"separation", Direction::higher_better,
            [](const FeatureDataset& d, const Partition& p) {
              return homogeneity_and_separation(euclidean_dissimilarity(d), p)
                  .second.value;
            }};
  fail(ErrorCode::invalid_data, "unknown statistic: " + name);
}

namespace {

std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t index) {
  return Rng::substream(master, index).next_u64();
}

}  // namespace

MonteCarloResult monte_carlo_test(const FeatureDataset& data,
                                  const ClusteringMethod& method,
                                  const ClusterStatistic& statistic,
                                  NullKind model_kind, int replicates,
                                  std::uint64_t seed) {
  if (replicates < 1)
    fail(ErrorCode::invalid_data, "monte carlo test needs M >= 1");
  ClusterModel observed = apply_method(Dataset{data}, method);
  MonteCarloResult r;
  r.statistic_name = statistic.name;
  r.direction = statistic.direction;
  r.replicates = replicates;
  r.t_observed = statistic.fn(data, observed.partition);

  NullModel null = fit_null(data, model_kind);
  r.t_null.reserve(static_cast<std::size_t>(replicates));
  // Replicates are keyed on their index; a failed replicate aborts the
  // run instead of silently shrinking M.
  for (int l = 0; l < replicates; ++l) {
    FeatureDataset sim =
        simulate(null, replicate_seed(seed, static_cast<std::uint64_t>(l)));
    try {
      ClusterModel cm = apply_method(Dataset{sim}, method);
      r.t_null.push_back(statistic.fn(sim, cm.partition));
    } catch (const Error& e) {
      fail(ErrorCode::replicate_failed,
           "replicate " + std::to_string(l + 1) + " failed: " + e.what());
    }
  }
  r.p_value = add_one_p_value(r.t_observed, r.t_null, r.direction);
  return r;
}

namespace {

IndexValue similarity_by_name(const std::string& name, const Partition& a,
                              const Partition& b) {
  if (name == "ari") return adjusted_rand(a, b);
  if (name == "rand") return rand_index(a, b);
  if (name == "jaccard") return jaccard(a, b);
  if (name == "fm") return fowlkes_mallows(a, b);
  fail(ErrorCode::invalid_data, "unknown similarity index: " + name);
}

double stability_statistic(const Dataset& d1, const Dataset& d2,
                           const SplitPair& pair,
                           const ClusteringMethod& method,
                           const std::string& similarity_index) {
  ClusterModel model1 = apply_method(d1, method);
  ClusterModel c2md = apply_method(d2, method);
  SplitPair work = pair;
  work.discovery = d1;
  work.validation = d2;
  Partition c2tf =
      transfer(model1, work, default_rule(method, SplitMode::inferential));
  return similarity_by_name(similarity_index, c2md.partition, c2tf).value;
}

}  // namespace

MonteCarloResult null_reference_validation(const SplitPair& pair,
                                           const ClusteringMethod& method,
                                           const std::string& similarity_index,
                                           NullKind model_kind, int replicates,
                                           std::uint64_t seed,
                                           bool fit_on_union) {
  if (pair.mode != SplitMode::inferential || !is_feature(pair.validation) ||
      !is_feature(pair.discovery))
    fail(ErrorCode::unsupported_mode,
         "null reference validation needs an inferential feature pair");
  if (replicates < 1)
    fail(ErrorCode::invalid_data, "monte carlo test needs M >= 1");

  const auto& d1 = std::get<FeatureDataset>(pair.discovery);
  const auto& d2 = std::get<FeatureDataset>(pair.validation);

  MonteCarloResult r;
  r.statistic_name = similarity_index + "(c2md,c2tf)";
  r.direction = Direction::higher_better;
  r.replicates = replicates;
  r.t_observed = stability_statistic(pair.discovery, pair.validation, pair,
                                     method, similarity_index);

  NullModel null;
  if (fit_on_union) {
    Matrix all(d1.n_objects() + d2.n_objects(), d1.n_variables());
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < d1.n_objects(); ++i) {
      ids.push_back("u1_" + d1.object_ids[i]);
      std::copy(d1.values.row(i).begin(), d1.values.row(i).end(),
                all.row(i).begin());
    }
    for (std::size_t i = 0; i < d2.n_objects(); ++i) {
      ids.push_back("u2_" + d2.object_ids[i]);
      std::copy(d2.values.row(i).begin(), d2.values.row(i).end(),
                all.row(d1.n_objects() + i).begin());
    }
    null = fit_null(FeatureDataset::create(std::move(all), std::move(ids),
                                           d1.variable_ids),
                    model_kind);
  } else {
    null = fit_null(d2, model_kind);
  }

  r.t_null.reserve(static_cast<std::size_t>(replicates));
  for (int l = 0; l < replicates; ++l) {
    std::uint64_t rs = replicate_seed(seed, static_cast<std::uint64_t>(l));
    FeatureDataset sim1 = simulate(null, d1.n_objects(), rs);
    FeatureDataset sim2 = simulate(null, d2.n_objects(), rs ^ 0x517cc1b727220a95ULL);
    try {
      r.t_null.push_back(stability_statistic(Dataset{sim1}, Dataset{sim2}, pair,
                                             method, similarity_index));
    } catch (const Error& e) {
      fail(ErrorCode::replicate_failed,
           "replicate " + std::to_string(l + 1) + " failed: " + e.what());
    }
  }
  r.p_value = add_one_p_value(r.t_observed, r.t_null, r.direction);
  return r;
}

}  // namespace cval
