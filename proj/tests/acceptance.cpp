// Acceptance gate: runs every release criterion and prints one
// pass/fail line each. Exits nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "cval/engine.hpp"
#include "cval/rng.hpp"
#include "helpers.hpp"

using namespace cval;
using namespace cval::testing;
namespace fs = std::filesystem;

namespace {

std::string g_cli_path;
int g_failures = 0;

void report(int index, const char* name, bool ok, double seconds) {
  std::printf("[%s] criterion %2d: %-38s (%.1fs)\n", ok ? "PASS" : "FAIL",
              index, name, seconds);
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

template <typename F>
void run_criterion(int index, const char* name, F&& body) {
  auto start = std::chrono::steady_clock::now();
  bool ok = false;
  try {
    ok = body();
  } catch (const std::exception& e) {
    std::printf("       criterion %d threw: %s\n", index, e.what());
  }
  double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  report(index, name, ok, seconds);
}

ClusteringMethod kmeans_method(int k, std::uint64_t seed, int restarts = 5,
                               Preprocessing prep = Preprocessing::none) {
  ClusteringMethod m;
  m.algorithm = Algorithm::kmeans;
  m.k = k;
  m.preprocessing = prep;
  m.seed = seed;
  m.max_iter = 100;
  m.n_restarts = restarts;
  return m;
}

ClusteringMethod pam_method(int k, Preprocessing prep = Preprocessing::none) {
  ClusteringMethod m;
  m.algorithm = Algorithm::pam;
  m.k = k;
  m.preprocessing = prep;
  return m;
}

// ---- 1: pair-count indices vs pair enumeration ----------------------

double oracle_rand(const PairCounts& c) {
  return static_cast<double>(c.a + c.d) /
         static_cast<double>(c.a + c.b + c.c + c.d);
}

double oracle_ari(const PairCounts& c) {
  double n = static_cast<double>(c.a + c.b + c.c + c.d);
  double expected =
      static_cast<double>(c.a + c.b) * static_cast<double>(c.a + c.c) / n;
  double maxi = 0.5 * static_cast<double>((c.a + c.b) + (c.a + c.c));
  if (maxi == expected) return 1.0;
  return (static_cast<double>(c.a) - expected) / (maxi - expected);
}

double oracle_jaccard(const PairCounts& c) {
  long long denom = c.a + c.b + c.c;
  return denom == 0 ? 1.0
                    : static_cast<double>(c.a) / static_cast<double>(denom);
}

double oracle_fm(const PairCounts& c) {
  if (c.a == 0) return (c.b == 0 && c.c == 0) ? 1.0 : 0.0;
  return static_cast<double>(c.a) /
         std::sqrt(static_cast<double>(c.a + c.b) *
                   static_cast<double>(c.a + c.c));
}

bool criterion_index_oracle() {
  Partition f1 = Partition::create({1, 1, 2, 2}, 2, make_ids(4));
  Partition f2 = Partition::create({1, 2, 1, 2}, 2, make_ids(4));
  if (std::abs(rand_index(f1, f2).value - 1.0 / 3.0) > 1e-12) return false;
  if (std::abs(adjusted_rand(f1, f2).value + 0.5) > 1e-12) return false;
  if (jaccard(f1, f2).value != 0.0) return false;
  if (fowlkes_mallows(f1, f2).value != 0.0) return false;

  Rng rng(101);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t n = 5 + rng.uniform_index(26);
    int k1 = 2 + static_cast<int>(rng.uniform_index(4));
    int k2 = 2 + static_cast<int>(rng.uniform_index(4));
    Partition p1 = random_partition(rng, n, std::min<int>(k1, (int)n));
    Partition p2 = random_partition(rng, n, std::min<int>(k2, (int)n));
    p2.object_ids = p1.object_ids;
    PairCounts pc = enumerate_pairs(p1, p2);
    if (std::abs(rand_index(p1, p2).value - oracle_rand(pc)) > 1e-12)
      return false;
    if (std::abs(adjusted_rand(p1, p2).value - oracle_ari(pc)) > 1e-12)
      return false;
    if (std::abs(jaccard(p1, p2).value - oracle_jaccard(pc)) > 1e-12)
      return false;
    if (std::abs(fowlkes_mallows(p1, p2).value - oracle_fm(pc)) > 1e-12)
      return false;
  }
  return true;
}

// ---- 2: chance correction -------------------------------------------

bool criterion_chance_correction() {
  std::vector<int> labels(60);
  for (std::size_t i = 0; i < 60; ++i) labels[i] = static_cast<int>(i % 3) + 1;
  Partition fixed = Partition::create(labels, 3, make_ids(60));
  Rng rng(202);
  double sum = 0.0;
  for (int t = 0; t < 1000; ++t) {
    auto shuffled = labels;
    rng.shuffle(shuffled);
    sum += adjusted_rand(fixed,
                         Partition::create(shuffled, 3, make_ids(60)))
               .value;
  }
  double mean = sum / 1000.0;
  std::printf("       mean ARI under relabeling: %.5f\n", mean);
  return mean >= -0.02 && mean <= 0.02;
}

// ---- 3: add-one p-value formula -------------------------------------

bool criterion_p_value_formula() {
  for (int m : {1, 9, 99}) {
    std::vector<double> worse(static_cast<std::size_t>(m));
    std::vector<double> better(static_cast<std::size_t>(m));
    for (int l = 0; l < m; ++l) {
      worse[static_cast<std::size_t>(l)] = -1.0 - l;
      better[static_cast<std::size_t>(l)] = 1.0 + l;
    }
    if (add_one_p_value(0.0, worse, Direction::higher_better) !=
        1.0 / (m + 1))
      return false;
    if (add_one_p_value(0.0, better, Direction::higher_better) != 1.0)
      return false;
    if (add_one_p_value(0.0, worse, Direction::lower_better) != 1.0)
      return false;
  }
  // Mixed vector with ties: t = 2 against {1, 2, 2, 3, 0} -> (3+1)/6.
  if (add_one_p_value(2.0, {1.0, 2.0, 2.0, 3.0, 0.0},
                      Direction::higher_better) != 4.0 / 6.0)
    return false;
  return true;
}

// ---- 4: null self-consistency ---------------------------------------

bool criterion_null_self_consistency() {
  std::vector<double> pvals;
  for (int t = 0; t < 200; ++t) {
    FeatureDataset data = make_uniform(100, 2, 4000 + t);
    MonteCarloResult r = monte_carlo_test(
        data, kmeans_method(3, 17, 2), cluster_statistic("asw"),
        NullKind::uniform_range, 39, 9000 + t);
    pvals.push_back(r.p_value);
  }
  std::sort(pvals.begin(), pvals.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < pvals.size(); ++i) {
    double hi = static_cast<double>(i + 1) / pvals.size() - pvals[i];
    double lo = pvals[i] - static_cast<double>(i) / pvals.size();
    ks = std::max({ks, hi, lo});
  }
  std::printf("       KS distance to uniform: %.4f\n", ks);
  return ks < 0.12;
}

// ---- 5: stability on separated structure ----------------------------

bool criterion_stability() {
  int good = 0;
  for (int seed = 0; seed < 100; ++seed) {
    FeatureDataset d =
        make_blobs({{-5.0, 0.0}, {5.0, 0.0}}, 100, 5000 + seed);
    SplitPair pair = split_inferential(Dataset{d}, 0.5, 6000 + seed);
    ClusteringMethod method = kmeans_method(2, 7000 + seed, 3);
    ClusterModel model1 = apply_method(pair.discovery, method);
    ClusterModel c2md = apply_method(pair.validation, method);
    Partition c2tf = transfer(model1, pair, default_rule(method, pair.mode));
    if (adjusted_rand(c2md.partition, c2tf).value >= 0.95) ++good;
  }
  std::printf("       seeds with ARI >= 0.95: %d / 100\n", good);
  return good >= 95;
}

// ---- 6: overoptimism direction --------------------------------------

bool criterion_overoptimism() {
  std::vector<ClusteringMethod> candidates;
  for (int k = 2; k <= 7; ++k) {
    for (Preprocessing prep :
         {Preprocessing::none, Preprocessing::standardize}) {
      candidates.push_back(kmeans_method(k, 31, 3, prep));
      candidates.push_back(pam_method(k, prep));
    }
  }
  double gap_sum = 0.0;
  int runs = 0;
  for (int r = 0; r < 50; ++r) {
    FeatureDataset d = make_uniform(200, 4, 8000 + r);
    SplitPair pair = split_inferential(Dataset{d}, 0.5, 8100 + r);
    SelectionResult sel =
        select_method(pair.discovery, candidates, "asw");
    double asw1 = 0.0;
    for (const auto& row : sel.ranking)
      if (!row.failed && row.method.algorithm == sel.best.algorithm &&
          row.method.k == sel.best.k &&
          row.method.preprocessing == sel.best.preprocessing)
        asw1 = row.criterion;
    ClusterModel model1 = apply_method(pair.discovery, sel.best);
    Partition c2tf =
        transfer(model1, pair, default_rule(sel.best, pair.mode));
    Partition usable = canonicalize(c2tf);
    if (usable.k < 2) continue;  // transfer collapsed; no ASW either side
    double asw2 =
        avg_silhouette_width(
            euclidean_dissimilarity(std::get<FeatureDataset>(pair.validation)),
            usable)
            .value;
    gap_sum += asw1 - asw2;
    ++runs;
  }
  double mean_gap = gap_sum / runs;
  std::printf("       mean optimism gap over %d runs: %.5f\n", runs, mean_gap);
  return runs >= 45 && mean_gap > 0.0;
}

// ---- 7: matching exactness ------------------------------------------

double brute_best(const Matrix& score, bool maximize) {
  std::size_t n = score.rows();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = maximize ? -1e300 : 1e300;
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += score(i, perm[i]);
    best = maximize ? std::max(best, total) : std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

bool criterion_matching_exactness() {
  Rng rng(707);
  for (int trial = 0; trial < 500; ++trial) {
    int k = 2 + static_cast<int>(rng.uniform_index(5));
    std::size_t n = static_cast<std::size_t>(k) * 4 + rng.uniform_index(20);

    // Intersection strategy against the overlap-maximizing permutation.
    Partition pa = random_partition(rng, n, k);
    Partition pb = random_partition(rng, n, k);
    pb.object_ids = pa.object_ids;
    auto table = contingency_table(pa, pb);
    Matrix overlap(static_cast<std::size_t>(k), static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < overlap.rows(); ++i)
      for (std::size_t j = 0; j < overlap.cols(); ++j)
        overlap(i, j) = static_cast<double>(table[i][j]);
    ClusterMatching mi = match_by_intersection(pa, pb);
    if (std::abs(mi.objective_value - brute_best(overlap, true)) > 1e-9)
      return false;

    // Centroid strategy against the distance-minimizing permutation.
    std::size_t p = 2 + rng.uniform_index(3);
    Matrix c1(static_cast<std::size_t>(k), p);
    Matrix c2(static_cast<std::size_t>(k), p);
    for (std::size_t i = 0; i < c1.rows(); ++i)
      for (std::size_t j = 0; j < p; ++j) {
        c1(i, j) = rng.uniform(-10.0, 10.0);
        c2(i, j) = rng.uniform(-10.0, 10.0);
      }
    Matrix dist(static_cast<std::size_t>(k), static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < dist.rows(); ++i)
      for (std::size_t j = 0; j < dist.cols(); ++j) {
        double s = 0.0;
        for (std::size_t q = 0; q < p; ++q) {
          double diff = c2(i, q) - c1(j, q);
          s += diff * diff;
        }
        dist(i, j) = std::sqrt(s);
      }
    std::vector<int> unit_labels;
    for (int i = 0; i < k; ++i) unit_labels.push_back(i + 1);
    ClusterModel m1 = external_model(
        Partition::create(unit_labels, k, make_ids((std::size_t)k, "a")), c1);
    ClusterModel m2 = external_model(
        Partition::create(unit_labels, k, make_ids((std::size_t)k, "b")), c2);
    ClusterMatching mc = match_by_centroids(m2, m1);
    if (std::abs(mc.objective_value - brute_best(dist, false)) > 1e-9)
      return false;
  }
  return true;
}

// ---- 8: seal tripwire -----------------------------------------------

bool criterion_seal() {
  FeatureDataset d = make_uniform(40, 2, 909);
  SplitPair pair = split_inferential(Dataset{d}, 0.5, 3);
  SealedDataset seal(pair.validation);

  std::vector<ClusteringMethod> cands{kmeans_method(2, 1),
                                      kmeans_method(3, 1)};
  (void)select_method(pair.discovery, cands, "asw", &seal);
  if (seal.open_count() != 0) return false;

  bool rejected = false;
  try {
    (void)select_method(pair.validation, cands, "asw", &seal);
  } catch (const Error& e) {
    rejected = e.code() == ErrorCode::seal_violation;
  }
  if (!rejected) return false;

  // File mutation between Step 1 and Step 2 through the full protocol.
  fs::path dir = fs::temp_directory_path() / "cval_accept_seal";
  fs::remove_all(dir);
  fs::create_directories(dir);
  fs::path dfile = dir / "d1.csv", vfile = dir / "d2.csv";
  write_feature_csv(std::get<FeatureDataset>(pair.discovery), dfile.string());
  write_feature_csv(std::get<FeatureDataset>(pair.validation), vfile.string());
  ProtocolConfig config;
  config.discovery_file = dfile.string();
  config.validation_file = vfile.string();
  config.seed = 2;
  config.candidates = cands;
  config.aspects = {"stab"};
  config.after_selection = [&] {
    FeatureDataset v = std::get<FeatureDataset>(pair.validation);
    Matrix values = v.values;
    values(0, 0) += 0.5;
    write_feature_csv(
        FeatureDataset::create(values, v.object_ids, v.variable_ids),
        vfile.string());
  };
  bool aborted = false;
  try {
    (void)run_protocol(config);
  } catch (const Error& e) {
    aborted = e.code() == ErrorCode::seal_violation;
  }
  fs::remove_all(dir);
  return aborted;
}

// ---- 9: determinism through the CLI ---------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool criterion_determinism() {
  fs::path dir = fs::temp_directory_path() / "cval_accept_det";
  fs::remove_all(dir);
  fs::create_directories(dir);
  FeatureDataset d = make_blobs({{-5.0, 0.0}, {5.0, 0.0}}, 40, 313);
  fs::path data = dir / "data.csv";
  write_feature_csv(d, data.string());
  fs::path out = dir / "run";

  std::ostringstream cfg;
  cfg << "{\n"
      << "  \"data_file\": \"" << data.string() << "\",\n"
      << "  \"seed\": 12,\n"
      << "  \"candidates\": [\n"
      << "    {\"algorithm\":\"kmeans\",\"k\":2,\"preprocessing\":\"none\","
         "\"seed\":5,\"max_iter\":100,\"n_restarts\":3},\n"
      << "    {\"algorithm\":\"kmeans\",\"k\":3,\"preprocessing\":\"none\","
         "\"seed\":5,\"max_iter\":100,\"n_restarts\":3}\n"
      << "  ],\n"
      << "  \"null_model\": \"uniform\",\n"
      << "  \"null_replicates\": 9,\n"
      << "  \"out_dir\": \"" << out.string() << "\"\n"
      << "}\n";
  fs::path cfg_path = dir / "cfg.json";
  std::ofstream(cfg_path) << cfg.str();

  auto run = [&](const std::string& extra) {
    std::string cmd = g_cli_path + " validate --config " + cfg_path.string() +
                      extra + " > /dev/null 2>&1";
    return std::system(cmd.c_str()) == 0;
  };
  std::vector<std::string> files = {
      "report.json", "plots/scores_method.csv", "plots/scores_result.csv",
      "plots/silhouettes_method.csv", "plots/silhouettes_result.csv"};

  if (!run("")) return false;
  std::vector<std::string> first;
  for (const auto& f : files) first.push_back(slurp(out / f));
  if (first[0].empty()) return false;
  if (!run(" --workers 4")) return false;
  for (std::size_t i = 0; i < files.size(); ++i)
    if (slurp(out / files[i]) != first[i]) return false;
  fs::remove_all(dir);
  return true;
}

// ---- 10: hand-computed fixture --------------------------------------

bool criterion_fixture() {
  FeatureDataset f = make_feature({{0.0}, {1.0}, {10.0}, {11.0}});
  DissimilarityDataset diss = euclidean_dissimilarity(f);
  Partition p = Partition::create({1, 1, 2, 2}, 2, make_ids(4));
  double asw = avg_silhouette_width(diss, p).value;
  double ch = calinski_harabasz(f, p).value;
  auto [hom, sep] = homogeneity_and_separation(diss, p);
  std::printf("       asw=%.6f ch=%.10f hom=%.2f sep=%.2f\n", asw, ch,
              hom.value, sep.value);
  return std::abs(asw - 0.89975) <= 1e-5 && std::abs(ch - 200.0) <= 1e-9 &&
         hom.value == 1.0 && sep.value == 9.0;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: acceptance <path-to-cli>\n");
    return 2;
  }
  g_cli_path = argv[1];

  run_criterion(1, "index oracle equivalence", criterion_index_oracle);
  run_criterion(2, "chance correction", criterion_chance_correction);
  run_criterion(3, "add-one p-value formula", criterion_p_value_formula);
  run_criterion(4, "null self-consistency", criterion_null_self_consistency);
  run_criterion(5, "stability on separated blobs", criterion_stability);
  run_criterion(6, "overoptimism direction", criterion_overoptimism);
  run_criterion(7, "matching exactness", criterion_matching_exactness);
  run_criterion(8, "seal tripwire", criterion_seal);
  run_criterion(9, "byte-identical reruns", criterion_determinism);
  run_criterion(10, "hand-computed fixture", criterion_fixture);

  if (g_failures) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
