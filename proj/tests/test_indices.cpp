#include <doctest.h>

#include <cmath>

#include "cval/indices.hpp"
#include "cval/rng.hpp"
#include "helpers.hpp"

using namespace cval;
using namespace cval::testing;

namespace {

// Index oracles straight from the pair counts.
double oracle_rand(const PairCounts& c) {
  return static_cast<double>(c.a + c.d) /
         static_cast<double>(c.a + c.b + c.c + c.d);
}

double oracle_ari(const PairCounts& c) {
  double n = static_cast<double>(c.a + c.b + c.c + c.d);
  double expected =
      static_cast<double>(c.a + c.b) * static_cast<double>(c.a + c.c) / n;
  double maxi =
      0.5 * static_cast<double>((c.a + c.b) + (c.a + c.c));
  if (maxi == expected) return 1.0;
  return (static_cast<double>(c.a) - expected) / (maxi - expected);
}

double oracle_jaccard(const PairCounts& c) {
  long long denom = c.a + c.b + c.c;
  if (denom == 0) return 1.0;
  return static_cast<double>(c.a) / static_cast<double>(denom);
}

double oracle_fm(const PairCounts& c) {
  if (c.a == 0) return (c.b == 0 && c.c == 0) ? 1.0 : 0.0;
  return static_cast<double>(c.a) /
         std::sqrt(static_cast<double>(c.a + c.b) *
                   static_cast<double>(c.a + c.c));
}

DissimilarityDataset gap_fixture() {
  return euclidean_dissimilarity(
      make_feature({{0.0}, {1.0}, {10.0}, {11.0}}));
}

Partition gap_partition() {
  return Partition::create({1, 1, 2, 2}, 2, make_ids(4));
}

}  // namespace

TEST_CASE("the crossing pattern hits every disagreement branch") {
  Partition p1 = Partition::create({1, 1, 2, 2}, 2, make_ids(4));
  Partition p2 = Partition::create({1, 2, 1, 2}, 2, make_ids(4));
  CHECK(rand_index(p1, p2).value == doctest::Approx(1.0 / 3.0));
  CHECK(adjusted_rand(p1, p2).value == doctest::Approx(-0.5));
  CHECK(jaccard(p1, p2).value == doctest::Approx(0.0));
  CHECK(fowlkes_mallows(p1, p2).value == doctest::Approx(0.0));
}

TEST_CASE("similarity indices agree with pair enumeration") {
  Rng rng(404);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t n = 5 + rng.uniform_index(26);
    int k1 = 2 + static_cast<int>(rng.uniform_index(4));
    int k2 = 2 + static_cast<int>(rng.uniform_index(4));
    k1 = std::min<int>(k1, static_cast<int>(n));
    k2 = std::min<int>(k2, static_cast<int>(n));
    Partition p1 = random_partition(rng, n, k1);
    Partition p2 = random_partition(rng, n, k2);
    p2.object_ids = p1.object_ids;
    PairCounts pc = enumerate_pairs(p1, p2);
    CHECK(std::abs(rand_index(p1, p2).value - oracle_rand(pc)) < 1e-12);
    CHECK(std::abs(adjusted_rand(p1, p2).value - oracle_ari(pc)) < 1e-12);
    CHECK(std::abs(jaccard(p1, p2).value - oracle_jaccard(pc)) < 1e-12);
    CHECK(std::abs(fowlkes_mallows(p1, p2).value - oracle_fm(pc)) < 1e-12);
  }
}

TEST_CASE("identical partitions score perfect agreement") {
  Rng rng(7);
  Partition p = random_partition(rng, 12, 3);
  CHECK(adjusted_rand(p, p).value == doctest::Approx(1.0));
  CHECK(jaccard(p, p).value == doctest::Approx(1.0));
  CHECK(fowlkes_mallows(p, p).value == doctest::Approx(1.0));
  CHECK(rand_index(p, p).value == doctest::Approx(1.0));
}

TEST_CASE("degenerate one-cluster partitions use the documented conventions") {
  Partition ones = Partition::create({1, 1, 1}, 1, make_ids(3));
  CHECK(adjusted_rand(ones, ones).value == doctest::Approx(1.0));
  CHECK(jaccard(ones, ones).value == doctest::Approx(1.0));
  Partition singletons = Partition::create({1, 2, 3}, 3, make_ids(3));
  CHECK(jaccard(singletons, singletons).value == doctest::Approx(1.0));
  CHECK(fowlkes_mallows(singletons, singletons).value == doctest::Approx(1.0));
  // All-singletons vs all-together: no pair agrees on "same cluster".
  CHECK(jaccard(singletons, ones).value == doctest::Approx(0.0));
  CHECK(fowlkes_mallows(singletons, ones).value == doctest::Approx(0.0));
}

TEST_CASE("adjusted rand is centered near zero under random relabeling") {
  Rng rng(2025);
  std::vector<int> labels(60);
  for (std::size_t i = 0; i < 60; ++i)
    labels[i] = static_cast<int>(i % 3) + 1;
  Partition fixed = Partition::create(labels, 3, make_ids(60));
  double sum = 0.0;
  int m = 200;
  for (int t = 0; t < m; ++t) {
    auto shuffled = labels;
    rng.shuffle(shuffled);
    Partition p = Partition::create(shuffled, 3, make_ids(60));
    sum += adjusted_rand(fixed, p).value;
  }
  CHECK(std::abs(sum / m) < 0.03);
}

TEST_CASE("hand-computed silhouette on the two-gap fixture") {
  IndexValue asw = avg_silhouette_width(gap_fixture(), gap_partition());
  // Point 0: a = 1, b = 10.5; point 1: a = 1, b = 9.5; mirrored.
  double expected = 0.5 * ((10.5 - 1.0) / 10.5 + (9.5 - 1.0) / 9.5);
  CHECK(asw.value == doctest::Approx(expected).epsilon(1e-12));
  CHECK(asw.value == doctest::Approx(0.89975).epsilon(1e-4));
  REQUIRE(asw.per_cluster.size() == 2);
  CHECK(asw.per_cluster[0].second == doctest::Approx(asw.per_cluster[1].second));
}

TEST_CASE("singletons get silhouette zero") {
  DissimilarityDataset d = euclidean_dissimilarity(
      make_feature({{0.0}, {1.0}, {10.0}}));
  Partition p = Partition::create({1, 1, 2}, 2, make_ids(3));
  auto s = silhouette_values(d, p);
  CHECK(s[2] == 0.0);
}

TEST_CASE("calinski-harabasz equals the hand value on the fixture") {
  FeatureDataset f = make_feature({{0.0}, {1.0}, {10.0}, {11.0}});
  IndexValue ch = calinski_harabasz(f, gap_partition());
  CHECK(ch.value == doctest::Approx(200.0).epsilon(1e-12));
}

TEST_CASE("homogeneity and separation on the fixture") {
  auto [hom, sep] = homogeneity_and_separation(gap_fixture(), gap_partition());
  CHECK(hom.value == doctest::Approx(1.0));
  CHECK(sep.value == doctest::Approx(9.0));
  CHECK(hom.direction == Direction::lower_better);
  CHECK(sep.direction == Direction::higher_better);
}

TEST_CASE("size profile reports descending shares") {
  Partition p = Partition::create({1, 2, 2, 2, 3}, 3, make_ids(5));
  IndexValue prof = cluster_size_profile(p);
  CHECK(prof.value == doctest::Approx(0.6));
  REQUIRE(prof.per_cluster.size() == 3);
  CHECK(prof.per_cluster[0].second == doctest::Approx(0.6));
  CHECK(prof.per_cluster[2].second == doctest::Approx(0.2));
}

TEST_CASE("asw requires at least two clusters and three objects") {
  DissimilarityDataset d = euclidean_dissimilarity(make_feature({{0.0}, {1.0}}));
  Partition p = Partition::create({1, 2}, 2, make_ids(2));
  try {
    (void)avg_silhouette_width(d, p);
    FAIL("expected undefined_index");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::undefined_index);
  }
}

TEST_CASE("chi-square association flags aligned categories") {
  Partition p = Partition::create({1, 1, 1, 2, 2, 2}, 2, make_ids(6));
  std::vector<std::string> aligned{"x", "x", "x", "y", "y", "y"};
  AssociationTest t = chi_square_association(p, aligned);
  CHECK(t.statistic == doctest::Approx(6.0));
  CHECK(t.p_value < 0.05);
  CHECK(!t.warning.empty());  // expected counts below 5

  std::vector<std::string> constant(6, "z");
  try {
    (void)chi_square_association(p, constant);
    FAIL("expected undefined_test");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::undefined_test);
  }
}

TEST_CASE("anova f association separates shifted clusters") {
  Partition p = Partition::create({1, 1, 1, 2, 2, 2}, 2, make_ids(6));
  std::vector<double> v{0.0, 0.1, -0.1, 5.0, 5.1, 4.9};
  AssociationTest t = anova_f_association(p, v);
  CHECK(t.df1 == doctest::Approx(1.0));
  CHECK(t.df2 == doctest::Approx(4.0));
  CHECK(t.statistic > 100.0);
  CHECK(t.p_value < 0.001);

  std::vector<double> constant(6, 2.5);
  AssociationTest deg = anova_f_association(p, constant);
  CHECK(deg.degenerate);
}
