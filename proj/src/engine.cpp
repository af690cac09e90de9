#include "cval/engine.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "cval/kernels.hpp"

namespace cval {

using nlohmann::json;

std::string to_string(Variant v) {
  return v == Variant::method_based ? "method_based" : "result_based";
}

// ---------------------------------------------------------------------
// Step 1: relative validation on discovery data only.
// ---------------------------------------------------------------------

namespace {

struct Criterion {
  std::string name;
  Direction direction;
};

Criterion criterion_info(const std::string& name) {
  if (name == "asw" || name == "ch" || name == "separation")
    return {name, Direction::higher_better};
  if (name == "homogeneity") return {name, Direction::lower_better};
  fail(ErrorCode::invalid_data, "unknown selection criterion: " + name);
}

double criterion_value(const Dataset& data, const Partition& p,
                       const std::string& name) {
  if (is_feature(data)) {
    return cluster_statistic(name).fn(std::get<FeatureDataset>(data), p);
  }
  const auto& diss = std::get<DissimilarityDataset>(data);
  if (name == "asw") return avg_silhouette_width(diss, p).value;
  if (name == "homogeneity")
    return homogeneity_and_separation(diss, p).first.value;
  if (name == "separation")
    return homogeneity_and_separation(diss, p).second.value;
  fail(ErrorCode::undefined_index,
       "criterion " + name + " needs feature-form data");
}

}  // namespace

SelectionResult select_method(const Dataset& d1,
                              const std::vector<ClusteringMethod>& candidates,
                              const std::string& criterion,
                              const SealedDataset* seal) {
  if (candidates.empty())
    fail(ErrorCode::no_method, "no candidate methods supplied");
  if (seal && dataset_hash(d1) == seal->hash())
    fail(ErrorCode::seal_violation,
         "sealed validation data passed into method selection");
  Criterion crit = criterion_info(criterion);

  SelectionResult result;
  result.criterion = criterion;
  std::optional<std::size_t> best;
  for (const auto& method : candidates) {
    SelectionRow row;
    row.method = method;
    try {
      ClusterModel model = apply_method(d1, method);
      row.criterion = criterion_value(d1, model.partition, criterion);
    } catch (const Error& e) {
      row.failed = true;
      row.error = e.what();
    }
    result.ranking.push_back(row);
    if (!row.failed) {
      bool better =
          !best ||
          (crit.direction == Direction::higher_better
               ? row.criterion > result.ranking[*best].criterion
               : row.criterion < result.ranking[*best].criterion);
      if (better) best = result.ranking.size() - 1;
    }
  }
  if (!best)
    fail(ErrorCode::no_method, "every candidate method failed on D1");
  result.best = result.ranking[*best].method;
  return result;
}

// ---------------------------------------------------------------------
// Context construction.
// ---------------------------------------------------------------------

ValidationContext make_context(const SplitPair& pair,
                               const ClusteringMethod& method,
                               std::uint64_t seal_hash) {
  ValidationContext ctx;
  ctx.pair = pair;
  ctx.method = method;
  ctx.seal_hash = seal_hash;
  ctx.model1 = apply_method(pair.discovery, method);
  ctx.c2md = apply_method(pair.validation, method);
  ctx.c2tf = transfer(ctx.model1, pair, default_rule(method, pair.mode));
  ctx.matching = match_by_intersection(ctx.c2md->partition, *ctx.c2tf);
  return ctx;
}

// ---------------------------------------------------------------------
// Internal validation.
// ---------------------------------------------------------------------

namespace {

// Internal indices computed on the data as given (not the method's
// preprocessed view), so discovery and validation values compare on the
// same footing.
std::vector<IndexComparison> internal_index_suite(const Dataset& d_data,
                                                  const Partition& d_part,
                                                  const Dataset& v_data,
                                                  const Partition& v_part) {
  struct Probe {
    std::string name;
    Direction direction;
    std::function<std::optional<double>(const Dataset&, const Partition&)> fn;
  };
  auto diss_of = [](const Dataset& d) {
    return is_feature(d) ? euclidean_dissimilarity(std::get<FeatureDataset>(d))
                         : std::get<DissimilarityDataset>(d);
  };
  std::vector<Probe> probes;
  probes.push_back({"asw", Direction::higher_better,
                    [&](const Dataset& d, const Partition& p)
                        -> std::optional<double> {
                      return avg_silhouette_width(diss_of(d), p).value;
                    }});
  probes.push_back({"ch", Direction::higher_better,
                    [](const Dataset& d, const Partition& p)
                        -> std::optional<double> {
                      if (!is_feature(d)) return std::nullopt;
                      return calinski_harabasz(std::get<FeatureDataset>(d), p)
                          .value;
                    }});
  probes.push_back({"homogeneity", Direction::lower_better,
                    [&](const Dataset& d, const Partition& p)
                        -> std::optional<double> {
                      return homogeneity_and_separation(diss_of(d), p)
                          .first.value;
                    }});
  probes.push_back({"separation", Direction::higher_better,
                    [&](const Dataset& d, const Partition& p)
                        -> std::optional<double> {
                      return homogeneity_and_separation(diss_of(d), p)
                          .second.value;
                    }});
  probes.push_back({"largest_share", Direction::higher_better,
                    [](const Dataset&, const Partition& p)
                        -> std::optional<double> {
                      return cluster_size_profile(p).value;
                    }});

  std::vector<IndexComparison> out;
  for (const auto& probe : probes) {
    IndexComparison cmp;
    cmp.name = probe.name;
    cmp.direction = probe.direction;
    try {
      cmp.discovery = probe.fn(d_data, d_part);
    } catch (const Error& e) {
      cmp.note = std::string("discovery: ") + e.what();
    }
    try {
      cmp.validation = probe.fn(v_data, v_part);
    } catch (const Error& e) {
      if (!cmp.note.empty()) cmp.note += "; ";
      cmp.note += std::string("validation: ") + e.what();
    }
    if (cmp.discovery && cmp.validation) {
      cmp.optimism_gap = probe.direction == Direction::higher_better
                             ? *cmp.discovery - *cmp.validation
                             : *cmp.validation - *cmp.discovery;
    }
    out.push_back(std::move(cmp));
  }
  return out;
}

std::vector<double> cluster_mean(const FeatureDataset& d, const Partition& p,
                                 int cluster) {
  std::vector<double> mean(d.n_variables(), 0.0);
  std::size_t count = 0;
  for (std::size_t i = 0; i < d.n_objects(); ++i) {
    if (p.labels[i] != cluster) continue;
    kernels::ops().accumulate(mean.data(), d.values.row(i).data(),
                              d.n_variables());
    ++count;
  }
  if (count > 0)
    for (double& v : mean) v /= static_cast<double>(count);
  return mean;
}

// Per-variable between-cluster F statistics, descending.
std::vector<std::pair<std::string, double>> variable_f_table(
    const FeatureDataset& d, const Partition& p) {
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t j = 0; j < d.n_variables(); ++j) {
    std::vector<double> column(d.n_objects());
    for (std::size_t i = 0; i < d.n_objects(); ++i) column[i] = d.values(i, j);
    try {
      AssociationTest t = anova_f_association(p, column);
      out.emplace_back(d.variable_ids[j],
                       t.degenerate && std::isnan(t.statistic) ? 0.0
                                                               : t.statistic);
    } catch (const Error&) {
      out.emplace_back(d.variable_ids[j], 0.0);
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.second > b.second;
  });
  return out;
}

const Partition& variant_partition(const ValidationContext& ctx,
                                   Variant variant) {
  return variant == Variant::method_based ? ctx.c2md->partition : *ctx.c2tf;
}

}  // namespace

InternalSection validate_internal(ValidationContext& ctx, Variant variant) {
  InternalSection section;
  section.variant = variant;
  const Partition& v_part = variant_partition(ctx, variant);
  section.indices = internal_index_suite(ctx.pair.discovery,
                                         ctx.model1.partition,
                                         ctx.pair.validation, v_part);

  bool feature_d = is_feature(ctx.pair.discovery);
  bool feature_v = is_feature(ctx.pair.validation);
  bool same_space = feature_d && feature_v &&
                    ctx.pair.mode == SplitMode::inferential;

  // Cluster-wise descriptors. Result-based clusters already correspond
  // one-to-one; method-based ones go through the matcher.
  std::vector<std::pair<int, int>> pairs;  // (validation cluster, discovery)
  if (variant == Variant::method_based) {
    section.matching = ctx.matching;
    for (const auto& e : ctx.matching->assignment)
      pairs.emplace_back(e.validation_cluster, e.discovery_cluster);
  } else {
    for (int c = 1; c <= ctx.model1.partition.k; ++c) pairs.emplace_back(c, c);
  }
  auto d_sizes = ctx.model1.partition.cluster_sizes();
  auto v_sizes = v_part.cluster_sizes();
  for (auto [vc, dc] : pairs) {
    MatchedCluster mc;
    mc.validation_cluster = vc;
    mc.discovery_cluster = dc;
    mc.share_discovery =
        static_cast<double>(d_sizes[static_cast<std::size_t>(dc - 1)]) /
        static_cast<double>(ctx.model1.partition.n_objects());
    mc.share_validation =
        vc <= v_part.k
            ? static_cast<double>(v_sizes[static_cast<std::size_t>(vc - 1)]) /
                  static_cast<double>(v_part.n_objects())
            : 0.0;
    if (feature_d)
      mc.centroid_discovery = cluster_mean(
          std::get<FeatureDataset>(ctx.pair.discovery), ctx.model1.partition,
          dc);
    if (feature_v)
      mc.centroid_validation = cluster_mean(
          std::get<FeatureDataset>(ctx.pair.validation), v_part, vc);
    if (same_space && !mc.centroid_discovery.empty() &&
        !mc.centroid_validation.empty())
      mc.centroid_distance = std::sqrt(kernels::ops().squared_distance(
          mc.centroid_discovery.data(), mc.centroid_validation.data(),
          mc.centroid_discovery.size()));
    section.matched_clusters.push_back(std::move(mc));
  }

  // Characterising variables: top 10 by between-cluster F on discovery.
  if (feature_d) {
    const auto& d1 = std::get<FeatureDataset>(ctx.pair.discovery);
    auto table = variable_f_table(d1, ctx.model1.partition);
    std::size_t top = std::min<std::size_t>(10, table.size());
    for (std::size_t i = 0; i < top; ++i) {
      VariableDescriptor vd;
      vd.variable = table[i].first;
      vd.f_discovery = table[i].second;
      if (same_space) {
        const auto& d2 = std::get<FeatureDataset>(ctx.pair.validation);
        auto it = std::find(d2.variable_ids.begin(), d2.variable_ids.end(),
                            vd.variable);
        if (it != d2.variable_ids.end()) {
          auto j = static_cast<std::size_t>(it - d2.variable_ids.begin());
          std::vector<double> column(d2.n_objects());
          for (std::size_t i2 = 0; i2 < d2.n_objects(); ++i2)
            column[i2] = d2.values(i2, j);
          try {
            vd.f_validation = anova_f_association(v_part, column).statistic;
          } catch (const Error&) {
          }
        }
      }
      section.top_variables.push_back(std::move(vd));
    }
  }
  return section;
}

// ---------------------------------------------------------------------
// External validation.
// ---------------------------------------------------------------------

namespace {

template <typename F>
void guarded(std::vector<std::string>& notes, const char* side, F&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    notes.push_back(std::string(side) + ": " + e.what());
  }
}

std::vector<std::string> restrict_variable(
    const ExternalVariable& ext, const std::vector<std::string>& ids) {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = ext.values.find(id);
    if (it == ext.values.end())
      fail(ErrorCode::schema_mismatch,
           "external variable missing object: " + id);
    out.push_back(it->second);
  }
  return out;
}

std::vector<double> to_numeric(const std::vector<std::string>& raw) {
  std::vector<double> out;
  out.reserve(raw.size());
  for (const auto& s : raw) {
    try {
      std::size_t pos = 0;
      double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      out.push_back(v);
    } catch (const std::exception&) {
      fail(ErrorCode::invalid_data,
           "external variable value is not numeric: " + s);
    }
  }
  return out;
}

AssociationTest run_association(const Partition& p,
                                const ExternalVariable& ext) {
  auto raw = restrict_variable(ext, p.object_ids);
  if (ext.numeric) return anova_f_association(p, to_numeric(raw));
  return chi_square_association(p, raw);
}

Partition restrict_partition(const Partition& ref,
                             const std::vector<std::string>& ids) {
  std::unordered_map<std::string, int> label_of;
  for (std::size_t i = 0; i < ref.object_ids.size(); ++i)
    label_of[ref.object_ids[i]] = ref.labels[i];
  std::vector<int> labels;
  for (const auto& id : ids) {
    auto it = label_of.find(id);
    if (it == label_of.end())
      fail(ErrorCode::schema_mismatch,
           "reference partition missing object: " + id);
    labels.push_back(it->second);
  }
  return canonicalize(Partition::create(std::move(labels), ref.k, ids));
}

void reject_meaningless(const ValidationContext& ctx, Variant variant) {
  // In descriptive mode the transferred clustering IS C1, so an
  // association test on the validation side tests nothing new.
  if (ctx.pair.mode == SplitMode::descriptive &&
      variant == Variant::result_based)
    fail(ErrorCode::meaningless_combination,
         "descriptive + result_based association testing is meaningless: "
         "the transferred partition equals C1");
}

}  // namespace

ExternalSection validate_external(ValidationContext& ctx, Variant variant,
                                  const ExternalVariable& external) {
  reject_meaningless(ctx, variant);
  ExternalSection section;
  section.variant = variant;
  const Partition& v_part = variant_partition(ctx, variant);
  guarded(section.notes, "discovery", [&] {
    section.discovery_test = run_association(ctx.model1.partition, external);
  });
  guarded(section.notes, "validation", [&] {
    section.validation_test = run_association(v_part, external);
  });
  return section;
}

ExternalSection validate_external(ValidationContext& ctx, Variant variant,
                                  const Partition& reference) {
  ExternalSection section;
  section.variant = variant;
  const Partition& v_part = variant_partition(ctx, variant);

  auto add_side = [&](const Partition& part, const char* side) {
    guarded(section.notes, side, [&] {
      Partition ref = restrict_partition(reference, part.object_ids);
      Partition canon = canonicalize(part);
      for (auto make : {adjusted_rand, jaccard, fowlkes_mallows}) {
        IndexValue v = make(canon, ref);
        bool is_discovery = std::string(side) == "discovery";
        auto it = std::find_if(section.reference_indices.begin(),
                               section.reference_indices.end(),
                               [&](const IndexComparison& c) {
                                 return c.name == v.name;
                               });
        if (it == section.reference_indices.end()) {
          IndexComparison cmp;
          cmp.name = v.name;
          cmp.direction = v.direction;
          section.reference_indices.push_back(cmp);
          it = section.reference_indices.end() - 1;
        }
        if (is_discovery) it->discovery = v.value;
        else it->validation = v.value;
      }
    });
  };
  add_side(ctx.model1.partition, "discovery");
  add_side(v_part, "validation");
  for (auto& cmp : section.reference_indices)
    if (cmp.discovery && cmp.validation)
      cmp.optimism_gap = *cmp.discovery - *cmp.validation;
  return section;
}

// ---------------------------------------------------------------------
// Stability validation.
// ---------------------------------------------------------------------

StabilitySection validate_stability(ValidationContext& ctx) {
  StabilitySection section;
  const Partition* a;
  const Partition* b;
  if (ctx.pair.mode == SplitMode::descriptive) {
    // C2tf equals C1 here, so this is literally C1 vs C2md.
    a = &ctx.model1.partition;
    b = &ctx.c2md->partition;
    section.compared = "c1_vs_c2md";
  } else {
    a = &ctx.c2md->partition;
    b = ctx.c2tf ? &*ctx.c2tf : nullptr;
    section.compared = "c2md_vs_c2tf";
  }
  Partition left = *a;
  Partition right = ctx.pair.mode == SplitMode::descriptive
                        ? Partition::create(b->labels, b->k, a->object_ids)
                        : *b;
  section.agreement.push_back(adjusted_rand(left, right));
  section.agreement.push_back(jaccard(left, right));
  section.agreement.push_back(fowlkes_mallows(left, right));

  // Contingency with rows permuted into matching order, matched pair
  // first, so agreement sits on the diagonal.
  auto raw = contingency_table(left, right);
  std::vector<std::size_t> row_order;
  if (ctx.matching && ctx.pair.mode == SplitMode::inferential) {
    for (const auto& e : ctx.matching->assignment)
      row_order.push_back(static_cast<std::size_t>(e.validation_cluster - 1));
    for (int c : ctx.matching->unpaired_validation)
      row_order.push_back(static_cast<std::size_t>(c - 1));
  } else {
    row_order.resize(raw.size());
    std::iota(row_order.begin(), row_order.end(), 0);
  }
  for (std::size_t r : row_order)
    if (r < raw.size()) section.matched_contingency.push_back(raw[r]);
  return section;
}

// ---------------------------------------------------------------------
// Visual validation: projection scores + silhouette plot data.
// ---------------------------------------------------------------------

namespace {

// Cyclic Jacobi eigensolver for a symmetric matrix.
void jacobi_eigen(Matrix a, std::vector<double>& eigenvalues,
                  Matrix& eigenvectors) {
  std::size_t n = a.rows();
  eigenvectors = Matrix(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) eigenvectors(i, i) = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-24) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (std::size_t i = 0; i < n; ++i) {
          double aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          double api = a(p, i), aqi = a(q, i);
          a(p, i) = c * api - s * aqi;
          a(q, i) = s * api + c * aqi;
        }
        for (std::size_t i = 0; i < n; ++i) {
          double vip = eigenvectors(i, p), viq = eigenvectors(i, q);
          eigenvectors(i, p) = c * vip - s * viq;
          eigenvectors(i, q) = s * vip + c * viq;
        }
      }
    }
  }
  eigenvalues.resize(n);
  for (std::size_t i = 0; i < n; ++i) eigenvalues[i] = a(i, i);
}

}  // namespace

ProjectionBasis fit_projection(const FeatureDataset& data) {
  std::size_t n = data.n_objects(), p = data.n_variables();
  if (p < 2)
    fail(ErrorCode::undefined_index, "projection needs at least 2 variables");
  ProjectionBasis basis;
  basis.center.assign(p, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    kernels::ops().accumulate(basis.center.data(), data.values.row(i).data(), p);
  for (double& c : basis.center) c /= static_cast<double>(n);

  Matrix cov(p, p, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < p; ++a) {
      double ca = data.values(i, a) - basis.center[a];
      for (std::size_t b = a; b < p; ++b)
        cov(a, b) += ca * (data.values(i, b) - basis.center[b]);
    }
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = a; b < p; ++b) {
      cov(a, b) /= static_cast<double>(n - 1);
      cov(b, a) = cov(a, b);
    }

  std::vector<double> evals;
  Matrix evecs;
  jacobi_eigen(cov, evals, evecs);
  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return evals[a] > evals[b];
                   });

  basis.loadings = Matrix(p, 2, 0.0);
  for (std::size_t c = 0; c < 2; ++c) {
    std::size_t col = order[c];
    // Sign convention: largest-magnitude component positive.
    std::size_t arg = 0;
    for (std::size_t i = 1; i < p; ++i)
      if (std::abs(evecs(i, col)) > std::abs(evecs(arg, col))) arg = i;
    double sign = evecs(arg, col) < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < p; ++i)
      basis.loadings(i, c) = sign * evecs(i, col);
  }
  return basis;
}

void project_points(const FeatureDataset& data, const ProjectionBasis& basis,
                    std::vector<std::pair<double, double>>& out) {
  if (data.n_variables() != basis.center.size())
    fail(ErrorCode::schema_mismatch,
         "projection basis dimensionality mismatch");
  out.clear();
  std::size_t p = data.n_variables();
  std::vector<double> centered(p);
  for (std::size_t i = 0; i < data.n_objects(); ++i) {
    for (std::size_t j = 0; j < p; ++j)
      centered[j] = data.values(i, j) - basis.center[j];
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      s1 += centered[j] * basis.loadings(j, 0);
      s2 += centered[j] * basis.loadings(j, 1);
    }
    out.emplace_back(s1, s2);
  }
}

namespace {

void append_silhouettes(std::vector<SilhouetteRow>& rows, const Dataset& data,
                        const Partition& part, const std::string& tag,
                        const std::vector<int>* cluster_order) {
  DissimilarityDataset diss =
      is_feature(data) ? euclidean_dissimilarity(std::get<FeatureDataset>(data))
                       : std::get<DissimilarityDataset>(data);
  auto s = silhouette_values(diss, part);
  std::vector<std::size_t> order(s.size());
  std::iota(order.begin(), order.end(), 0);
  // Cluster blocks in the given order (matching order when supplied),
  // silhouettes descending inside each block.
  auto rank_of = [&](int cluster) {
    if (!cluster_order) return cluster;
    auto it = std::find(cluster_order->begin(), cluster_order->end(), cluster);
    return it == cluster_order->end()
               ? cluster + static_cast<int>(cluster_order->size())
               : static_cast<int>(it - cluster_order->begin());
  };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    int ra = rank_of(part.labels[a]), rb = rank_of(part.labels[b]);
    if (ra != rb) return ra < rb;
    return s[a] > s[b];
  });
  int position = 0;
  for (std::size_t i : order) {
    SilhouetteRow row;
    row.object_id = part.object_ids[i];
    row.cluster = part.labels[i];
    row.s_value = s[i];
    row.order = ++position;
    row.dataset = tag;
    rows.push_back(std::move(row));
  }
}

}  // namespace

VisualSection validate_visual(ValidationContext& ctx, Variant variant,
                              std::optional<NullKind> null_counterpart,
                              std::uint64_t null_seed) {
  VisualSection section;
  section.variant = variant;
  const Partition& v_part = variant_partition(ctx, variant);
  bool feature_d = is_feature(ctx.pair.discovery);
  bool feature_v = is_feature(ctx.pair.validation);

  std::optional<ProjectionBasis> basis_d, basis_v;
  if (feature_d && feature_v) {
    try {
      basis_d = fit_projection(std::get<FeatureDataset>(ctx.pair.discovery));
      // Descriptive validation data lives on different variables, so it
      // gets its own projection space.
      basis_v = ctx.pair.mode == SplitMode::inferential
                    ? basis_d
                    : std::optional<ProjectionBasis>(fit_projection(
                          std::get<FeatureDataset>(ctx.pair.validation)));
    } catch (const Error& e) {
      section.projection_skipped = true;
      section.notes.push_back(e.what());
    }
  } else {
    section.projection_skipped = true;
    section.notes.push_back(
        "projection skipped: dissimilarity data has no coordinates");
  }

  if (!section.projection_skipped) {
    std::vector<std::pair<double, double>> pts;
    const auto& d1 = std::get<FeatureDataset>(ctx.pair.discovery);
    project_points(d1, *basis_d, pts);
    for (std::size_t i = 0; i < pts.size(); ++i)
      section.scores.push_back({d1.object_ids[i], pts[i].first, pts[i].second,
                                ctx.model1.partition.labels[i], "discovery"});
    const auto& d2 = std::get<FeatureDataset>(ctx.pair.validation);
    project_points(d2, *basis_v, pts);
    for (std::size_t i = 0; i < pts.size(); ++i)
      section.scores.push_back({d2.object_ids[i], pts[i].first, pts[i].second,
                                v_part.labels[i], "validation"});
    if (null_counterpart && feature_v &&
        ctx.pair.mode == SplitMode::inferential) {
      NullModel null = fit_null(d2, *null_counterpart);
      FeatureDataset sim = simulate(null, null_seed);
      ClusterModel sim_model = apply_method(Dataset{sim}, ctx.method);
      project_points(sim, *basis_d, pts);
      for (std::size_t i = 0; i < pts.size(); ++i)
        section.scores.push_back({sim.object_ids[i], pts[i].first,
                                  pts[i].second,
                                  sim_model.partition.labels[i], "null"});
    }
  }

  // Validation-side silhouette blocks follow the matching order for the
  // method-based variant.
  std::vector<int> match_order;
  if (variant == Variant::method_based && ctx.matching) {
    for (const auto& e : ctx.matching->assignment)
      match_order.push_back(e.validation_cluster);
    for (int c : ctx.matching->unpaired_validation) match_order.push_back(c);
  }
  try {
    append_silhouettes(section.silhouettes, ctx.pair.discovery,
                       ctx.model1.partition, "discovery", nullptr);
    append_silhouettes(section.silhouettes, ctx.pair.validation, v_part,
                       "validation",
                       match_order.empty() ? nullptr : &match_order);
  } catch (const Error& e) {
    section.notes.push_back(std::string("silhouettes: ") + e.what());
  }
  return section;
}

}  // namespace cval
