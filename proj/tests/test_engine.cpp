#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cval/engine.hpp"
#include "helpers.hpp"

using namespace cval;
using namespace cval::testing;

namespace fs = std::filesystem;

namespace {

ClusteringMethod kmeans_method(int k, std::uint64_t seed, int restarts = 5) {
  ClusteringMethod m;
  m.algorithm = Algorithm::kmeans;
  m.k = k;
  m.seed = seed;
  m.max_iter = 100;
  m.n_restarts = restarts;
  return m;
}

ClusteringMethod pam_method(int k) {
  ClusteringMethod m;
  m.algorithm = Algorithm::pam;
  m.k = k;
  return m;
}

std::vector<ClusteringMethod> kmeans_candidates(std::initializer_list<int> ks) {
  std::vector<ClusteringMethod> out;
  for (int k : ks) out.push_back(kmeans_method(k, 7));
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path temp_dir(const char* name) {
  fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("selection picks the cleanly separated k") {
  FeatureDataset d = make_blobs({{-6.0, 0.0}, {6.0, 0.0}}, 30, 3);
  SelectionResult sel =
      select_method(Dataset{d}, kmeans_candidates({2, 3, 4}), "asw");
  CHECK(sel.best.k == 2);
  CHECK(sel.ranking.size() == 3);
  for (const auto& row : sel.ranking) CHECK(!row.failed);
}

TEST_CASE("single candidate comes back unchanged") {
  FeatureDataset d = make_uniform(20, 2, 5);
  SelectionResult sel =
      select_method(Dataset{d}, kmeans_candidates({3}), "asw");
  CHECK(sel.best.k == 3);
  CHECK(sel.ranking.size() == 1);
}

TEST_CASE("failed candidates are recorded, all failing aborts") {
  FeatureDataset d = make_uniform(6, 2, 5);
  // k = 5 leaves silhouettes defined, k = 7 exceeds n and fails.
  std::vector<ClusteringMethod> cands = kmeans_candidates({7, 2});
  SelectionResult sel = select_method(Dataset{d}, cands, "asw");
  CHECK(sel.ranking[0].failed);
  CHECK(!sel.ranking[1].failed);
  CHECK(sel.best.k == 2);

  try {
    (void)select_method(Dataset{d}, kmeans_candidates({7, 8}), "asw");
    FAIL("expected no_method");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::no_method);
  }
}

TEST_CASE("sealed validation data cannot enter method selection") {
  FeatureDataset d = make_uniform(20, 2, 5);
  SplitPair pair = split_inferential(Dataset{d}, 0.5, 3);
  SealedDataset seal(pair.validation);
  try {
    (void)select_method(pair.validation, kmeans_candidates({2}), "asw", &seal);
    FAIL("expected seal_violation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::seal_violation);
  }
  // Legitimate selection on discovery data never opens the seal.
  (void)select_method(pair.discovery, kmeans_candidates({2, 3}), "asw", &seal);
  CHECK(seal.open_count() == 0);
}

TEST_CASE("make_context wires the two routes and the matching") {
  FeatureDataset d = make_blobs({{-5.0, 0.0}, {5.0, 0.0}}, 40, 11);
  SplitPair pair = split_inferential(Dataset{d}, 0.5, 3);
  ValidationContext ctx = make_context(pair, kmeans_method(2, 9), 0xabc);
  CHECK(ctx.model1.partition.k == 2);
  REQUIRE(ctx.c2md.has_value());
  REQUIRE(ctx.c2tf.has_value());
  REQUIRE(ctx.matching.has_value());
  CHECK(ctx.c2md->partition.n_objects() ==
        dataset_object_ids(pair.validation).size());
  CHECK(ctx.seal_hash == 0xabc);
  CHECK(ctx.matching->assignment.size() == 2);
}

TEST_CASE("descriptive duplicate-variable split shows zero optimism gaps") {
  // Four identical columns; each side of the variable split sees the
  // same numbers, so a deterministic method scores identically.
  Matrix m(12, 4);
  Rng rng(6);
  for (std::size_t i = 0; i < 12; ++i)
    m(i, 0) = m(i, 1) = m(i, 2) = m(i, 3) = rng.normal();
  FeatureDataset d =
      FeatureDataset::create(std::move(m), make_ids(12), make_vars(4));
  SplitPair pair = split_descriptive(Dataset{d}, 0.5, 1);
  ValidationContext ctx = make_context(pair, pam_method(2), 0);
  InternalSection s = validate_internal(ctx, Variant::result_based);
  for (const auto& cmp : s.indices) {
    if (!cmp.optimism_gap) continue;
    CHECK(*cmp.optimism_gap == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("internal validation reports signed gaps and descriptors") {
  FeatureDataset d = make_blobs({{-5.0, 0.0}, {5.0, 0.0}}, 30, 13);
  SplitPair pair = split_inferential(Dataset{d}, 0.5, 9);
  ValidationContext ctx = make_context(pair, kmeans_method(2, 3), 0);
  InternalSection s = validate_internal(ctx, Variant::method_based);
  CHECK(!s.indices.empty());
  bool saw_asw = false;
  for (const auto& cmp : s.indices)
    if (cmp.name == "asw") {
      saw_asw = true;
      REQUIRE(cmp.discovery.has_value());
      REQUIRE(cmp.validation.has_value());
      CHECK(*cmp.optimism_gap ==
            doctest::Approx(*cmp.discovery - *cmp.validation));
    }
  CHECK(saw_asw);
  CHECK(s.matched_clusters.size() == 2);
  for (const auto& mc : s.matched_clusters) {
    CHECK(mc.share_discovery > 0.3);
    REQUIRE(mc.centroid_distance.has_value());
    CHECK(*mc.centroid_distance < 1.0);
  }
  CHECK(!s.top_variables.empty());
}

TEST_CASE("external association testing on both sides") {
  FeatureDataset d = make_blobs({{-5.0}, {5.0}}, 20, 17);
  SplitPair pair = split_inferential(Dataset{d}, 0.5, 5);
  ValidationContext ctx = make_context(pair, kmeans_method(2, 3), 0);

  // Label objects by the blob they were generated from.
  ExternalVariable ext;
  ext.name = "origin";
  ext.numeric = false;
  for (std::size_t i = 0; i < d.n_objects(); ++i)
    ext.values[d.object_ids[i]] = i < 20 ? "left" : "right";

  ExternalSection s = validate_external(ctx, Variant::result_based, ext);
  REQUIRE(s.discovery_test.has_value());
  REQUIRE(s.validation_test.has_value());
  CHECK(s.discovery_test->p_value < 0.01);
  CHECK(s.validation_test->p_value < 0.01);
}

TEST_CASE("descriptive result-based association testing is rejected") {
  FeatureDataset d = make_uniform(10, 4, 3);
  SplitPair pair = split_descriptive(Dataset{d}, 0.5, 1);
  ValidationContext ctx = make_context(pair, pam_method(2), 0);
  ExternalVariable ext;
  ext.name = "x";
  ext.numeric = true;
  for (const auto& id : d.object_ids) ext.values[id] = "1.0";
  try {
    (void)validate_external(ctx, Variant::result_based, ext);
    FAIL("expected meaningless_combination");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::meaningless_combination);
  }
}

TEST_CASE("reference partition equal to c1 gives discovery ari one") {
  FeatureDataset d = make_blobs({{-5.0, 0.0}, {5.0, 0.0}}, 25, 19);
  SplitPair pair = split_inferential(Dataset{d}, 0.5, 7);
  ValidationContext ctx = make_context(pair, kmeans_method(2, 3), 0);

  // A full-data reference whose restriction to D1 equals C1.
  std::vector<int> labels(d.n_objects());
  std::unordered_map<std::string, int> c1;
  for (std::size_t i = 0; i < ctx.model1.partition.n_objects(); ++i)
    c1[ctx.model1.partition.object_ids[i]] = ctx.model1.partition.labels[i];
  for (std::size_t i = 0; i < d.n_objects(); ++i) {
    auto it = c1.find(d.object_ids[i]);
    labels[i] = it != c1.end() ? it->second : (d.values(i, 0) < 0 ? 1 : 2);
  }
  Partition reference = Partition::create(labels, 2, d.object_ids);

  ExternalSection s =
      validate_external(ctx, Variant::method_based, reference);
  for (const auto& cmp : s.reference_indices)
    if (cmp.name == "ari") {
      REQUIRE(cmp.discovery.has_value());
      CHECK(*cmp.discovery == doctest::Approx(1.0));
    }
}

TEST_CASE("stability compares the right partitions per mode") {
  FeatureDataset d = make_blobs({{-5.0, 0.0}, {5.0, 0.0}}, 30, 23);
  SplitPair pair = split_inferential(Dataset{d}, 0.5, 11);
  ValidationContext ctx = make_context(pair, kmeans_method(2, 3), 0);
  StabilitySection s = validate_stability(ctx);
  CHECK(s.compared == "c2md_vs_c2tf");
  for (const auto& v : s.agreement) CHECK(v.value == doctest::Approx(1.0));
  CHECK(!s.matched_contingency.empty());

  // Descriptive with duplicated halves: C1 vs C2md over the same data.
  Matrix m(10, 4);
  Rng rng(2);
  for (std::size_t i = 0; i < 10; ++i)
    m(i, 0) = m(i, 1) = m(i, 2) = m(i, 3) = rng.normal();
  FeatureDataset dup =
      FeatureDataset::create(std::move(m), make_ids(10), make_vars(4));
  SplitPair desc = split_descriptive(Dataset{dup}, 0.5, 1);
  ValidationContext dctx = make_context(desc, pam_method(2), 0);
  StabilitySection ds = validate_stability(dctx);
  CHECK(ds.compared == "c1_vs_c2md");
  for (const auto& v : ds.agreement) CHECK(v.value == doctest::Approx(1.0));
}

TEST_CASE("projection basis on axis-aligned variance") {
  // Variance only along the first coordinate: the first loading is e1
  // with positive sign, and a held-out point projects to its x value.
  FeatureDataset d = make_feature({{-3.0, 0.0, 0.0},
                                   {-1.0, 0.0, 0.0},
                                   {1.0, 0.0, 0.0},
                                   {3.0, 0.0, 0.0}});
  ProjectionBasis basis = fit_projection(d);
  CHECK(basis.loadings(0, 0) == doctest::Approx(1.0));
  CHECK(basis.loadings(1, 0) == doctest::Approx(0.0));
  CHECK(basis.loadings(2, 0) == doctest::Approx(0.0));

  Matrix probe(2, 3, 0.0);
  probe(0, 0) = 3.0;
  probe(1, 0) = -2.0;
  FeatureDataset v =
      FeatureDataset::create(std::move(probe), make_ids(2, "v"), d.variable_ids);
  std::vector<std::pair<double, double>> pts;
  project_points(v, basis, pts);
  CHECK(pts[0].first == doctest::Approx(3.0));
  CHECK(pts[1].first == doctest::Approx(-2.0));
}

TEST_CASE("projecting the fitting data reproduces its own scores") {
  FeatureDataset d = make_uniform(15, 4, 29);
  ProjectionBasis basis = fit_projection(d);
  std::vector<std::pair<double, double>> a, b;
  project_points(d, basis, a);
  project_points(d, basis, b);
  CHECK(a == b);
}

TEST_CASE("visual section gates the projection on feature data") {
  FeatureDataset f = make_blobs({{0.0, 0.0}, {9.0, 0.0}}, 15, 31);
  DissimilarityDataset diss = euclidean_dissimilarity(f);
  SplitPair pair = split_inferential(Dataset{diss}, 0.5, 3);
  ValidationContext ctx = make_context(pair, pam_method(2), 0);
  VisualSection s = validate_visual(ctx, Variant::method_based);
  CHECK(s.projection_skipped);
  CHECK(s.scores.empty());
  CHECK(!s.silhouettes.empty());

  // Silhouettes are blocked by cluster and sorted descending inside.
  int last_cluster = -1;
  double last_value = 2.0;
  for (const auto& row : s.silhouettes) {
    if (row.dataset != "validation") continue;
    if (row.cluster != last_cluster) {
      last_cluster = row.cluster;
      last_value = 2.0;
    }
    CHECK(row.s_value <= last_value + 1e-12);
    last_value = row.s_value;
  }
}

TEST_CASE("method and model json round-trip") {
  ClusteringMethod m = kmeans_method(3, 77);
  ClusteringMethod back = method_from_json(method_to_json(m));
  CHECK(back.algorithm == m.algorithm);
  CHECK(back.k == m.k);
  CHECK(back.seed == m.seed);
  CHECK(back.n_restarts == m.n_restarts);

  FeatureDataset d = make_blobs({{0.0, 0.0}, {7.0, 0.0}}, 10, 37);
  ClusterModel model = apply_method(Dataset{d}, m);
  ClusterModel mback = model_from_json(model_to_json(model));
  CHECK(mback.partition.labels == model.partition.labels);
  REQUIRE(mback.centroids.has_value());
  CHECK(*mback.centroids == *model.centroids);
  CHECK(mback.objective == model.objective);
}

TEST_CASE("run_protocol produces a complete deterministic report") {
  FeatureDataset d = make_blobs({{-5.0, 0.0}, {5.0, 0.0}}, 30, 41);
  fs::path dir = temp_dir("cval_engine_run");
  fs::path data = dir / "data.csv";
  write_feature_csv(d, data.string());

  ProtocolConfig config;
  config.data_file = data.string();
  config.seed = 4;
  config.candidates = kmeans_candidates({2, 3});
  config.null_kind = NullKind::uniform_range;
  config.null_replicates = 9;
  config.out_dir = (dir / "out1").string();
  ValidationReport r1 = run_protocol(config);
  config.out_dir = (dir / "out2").string();
  ValidationReport r2 = run_protocol(config);

  CHECK(r1.method.k == 2);
  CHECK(r1.internal_method.has_value());
  CHECK(r1.internal_result.has_value());
  CHECK(r1.stability.has_value());
  CHECK(r1.stability->null_reference.has_value());
  CHECK(r1.visual_method.has_value());
  CHECK(r1.failures.empty());

  // Byte-identical artifacts across reruns, bar the differing out_dir
  // echoed inside the config block.
  auto j1 = slurp(dir / "out1" / "report.json");
  auto j2 = slurp(dir / "out2" / "report.json");
  auto strip = [](std::string s, const std::string& needle) {
    for (auto pos = s.find(needle); pos != std::string::npos;
         pos = s.find(needle, pos))
      s.erase(pos, needle.size());
    return s;
  };
  CHECK(strip(j1, "out1") == strip(j2, "out2"));
  CHECK(slurp(dir / "out1" / "plots" / "scores_method.csv") ==
        slurp(dir / "out2" / "plots" / "scores_method.csv"));
  CHECK(slurp(dir / "out1" / "plots" / "silhouettes_result.csv") ==
        slurp(dir / "out2" / "plots" / "silhouettes_result.csv"));
  fs::remove_all(dir);
}

TEST_CASE("mutating the validation file between steps trips the seal") {
  FeatureDataset d = make_uniform(24, 2, 43);
  fs::path dir = temp_dir("cval_engine_seal");
  SplitPair pair = split_inferential(Dataset{d}, 0.5, 1);
  fs::path dfile = dir / "d1.csv";
  fs::path vfile = dir / "d2.csv";
  write_feature_csv(std::get<FeatureDataset>(pair.discovery), dfile.string());
  write_feature_csv(std::get<FeatureDataset>(pair.validation), vfile.string());

  ProtocolConfig config;
  config.discovery_file = dfile.string();
  config.validation_file = vfile.string();
  config.seed = 2;
  config.candidates = kmeans_candidates({2});
  config.aspects = {"stab"};
  config.after_selection = [&] {
    FeatureDataset tampered = std::get<FeatureDataset>(pair.validation);
    Matrix values = tampered.values;
    values(0, 0) += 1.0;
    write_feature_csv(FeatureDataset::create(values, tampered.object_ids,
                                             tampered.variable_ids),
                      vfile.string());
  };
  try {
    (void)run_protocol(config);
    FAIL("expected seal_violation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::seal_violation);
  }
  fs::remove_all(dir);
}

TEST_CASE("aspect failures are recorded without aborting the run") {
  FeatureDataset d = make_uniform(24, 2, 47);
  fs::path dir = temp_dir("cval_engine_aspects");
  fs::path data = dir / "data.csv";
  write_feature_csv(d, data.string());

  ProtocolConfig config;
  config.data_file = data.string();
  config.seed = 5;
  config.candidates = kmeans_candidates({2});
  config.aspects = {"ext", "stab"};
  config.external_partition_file = (dir / "missing.csv").string();
  ValidationReport r = run_protocol(config);
  CHECK(r.stability.has_value());
  REQUIRE(!r.failures.empty());
  CHECK(r.failures[0].aspect == "external/input");
  fs::remove_all(dir);
}

TEST_CASE("declared thresholds are echoed, never judged") {
  FeatureDataset d = make_blobs({{-5.0}, {5.0}}, 15, 53);
  fs::path dir = temp_dir("cval_engine_thresh");
  fs::path data = dir / "data.csv";
  write_feature_csv(d, data.string());

  ProtocolConfig config;
  config.data_file = data.string();
  config.seed = 6;
  config.candidates = kmeans_candidates({2});
  config.aspects = {"int"};
  config.declared_threshold = 0.8;
  ValidationReport r = run_protocol(config);
  bool echoed = false;
  for (const auto& c : r.caveats)
    if (c.find("0.8") != std::string::npos) echoed = true;
  CHECK(echoed);
  std::string json = report_to_json(r);
  CHECK(json.find("\"validated\"") == std::string::npos);
  fs::remove_all(dir);
}
