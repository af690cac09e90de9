#include "cval/split.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_set>

#include "cval/rng.hpp"

namespace cval {

std::uint64_t dataset_hash(const Dataset& d) {
  return std::visit([](const auto& x) { return content_hash(x); }, d);
}

std::string to_string(SplitMode m) {
  return m == SplitMode::inferential ? "inferential" : "descriptive";
}

SplitMode split_mode_from_string(const std::string& s) {
  if (s == "inferential") return SplitMode::inferential;
  if (s == "descriptive") return SplitMode::descriptive;
  fail(ErrorCode::invalid_data, "unknown split mode: " + s);
}

namespace {

// Shuffles the sorted id list and takes the first ceil(ratio*n) for the
// discovery side.
std::unordered_set<std::string> pick_discovery_ids(
    const std::vector<std::string>& ids, double ratio, Rng& rng) {
  std::vector<std::string> sorted = ids;
  std::sort(sorted.begin(), sorted.end());
  rng.shuffle(sorted);
  auto n1 = static_cast<std::size_t>(
      std::ceil(ratio * static_cast<double>(sorted.size())));
  return {sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n1)};
}

FeatureDataset take_objects(const FeatureDataset& d,
                            const std::vector<std::size_t>& rows) {
  Matrix m(rows.size(), d.n_variables());
  std::vector<std::string> ids;
  ids.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    ids.push_back(d.object_ids[rows[r]]);
    for (std::size_t j = 0; j < d.n_variables(); ++j)
      m(r, j) = d.values(rows[r], j);
  }
  return FeatureDataset::create(std::move(m), std::move(ids), d.variable_ids);
}

DissimilarityDataset take_submatrix(const DissimilarityDataset& d,
                                    const std::vector<std::size_t>& rows) {
  Matrix m(rows.size(), rows.size());
  std::vector<std::string> ids;
  ids.reserve(rows.size());
  for (std::size_t a = 0; a < rows.size(); ++a) {
    ids.push_back(d.object_ids[rows[a]]);
    for (std::size_t b = 0; b < rows.size(); ++b)
      m(a, b) = d.d(rows[a], rows[b]);
  }
  return DissimilarityDataset::create(std::move(m), std::move(ids));
}

FeatureDataset take_variables(const FeatureDataset& d,
                              const std::vector<std::size_t>& cols) {
  Matrix m(d.n_objects(), cols.size());
  std::vector<std::string> vids;
  vids.reserve(cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c) {
    vids.push_back(d.variable_ids[cols[c]]);
    for (std::size_t i = 0; i < d.n_objects(); ++i)
      m(i, c) = d.values(i, cols[c]);
  }
  return FeatureDataset::create(std::move(m), d.object_ids, std::move(vids));
}

void check_part_sizes(std::size_t n1, std::size_t n2, const char* what) {
  if (n1 < 2 || n2 < 2)
    fail(ErrorCode::part_too_small,
         std::string("split would leave a part with fewer than 2 ") + what);
}

}  // namespace

SplitPair split_inferential(
    const Dataset& data, double ratio, std::uint64_t seed,
    const std::unordered_map<std::string, std::string>* strata) {
  if (ratio <= 0.0 || ratio >= 1.0)
    fail(ErrorCode::invalid_data, "split ratio must be in (0,1)");
  const auto& ids = dataset_object_ids(data);

  Rng rng(seed);
  std::unordered_set<std::string> discovery_ids;
  if (!strata) {
    discovery_ids = pick_discovery_ids(ids, ratio, rng);
  } else {
    // Per-stratum seeded splits, strata visited in sorted order.
    std::map<std::string, std::vector<std::string>> groups;
    for (const auto& id : ids) {
      auto it = strata->find(id);
      if (it == strata->end())
        fail(ErrorCode::schema_mismatch, "no stratum for object " + id);
      groups[it->second].push_back(id);
    }
    for (auto& [name, members] : groups) {
      auto picked = pick_discovery_ids(members, ratio, rng);
      discovery_ids.insert(picked.begin(), picked.end());
    }
  }

  std::vector<std::size_t> d_rows, v_rows;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (discovery_ids.count(ids[i])) d_rows.push_back(i);
    else v_rows.push_back(i);
  }
  check_part_sizes(d_rows.size(), v_rows.size(), "objects");

  SplitPair pair;
  pair.mode = SplitMode::inferential;
  pair.ratio = ratio;
  pair.seed = seed;
  if (is_feature(data)) {
    const auto& f = std::get<FeatureDataset>(data);
    pair.discovery = take_objects(f, d_rows);
    pair.validation = take_objects(f, v_rows);
  } else {
    const auto& ds = std::get<DissimilarityDataset>(data);
    pair.discovery = take_submatrix(ds, d_rows);
    pair.validation = take_submatrix(ds, v_rows);
    Matrix cross(d_rows.size(), v_rows.size());
    for (std::size_t a = 0; a < d_rows.size(); ++a)
      for (std::size_t b = 0; b < v_rows.size(); ++b)
        cross(a, b) = ds.d(d_rows[a], v_rows[b]);
    pair.cross_block = std::move(cross);
  }
  return pair;
}

SplitPair split_descriptive(const Dataset& data, double ratio,
                            std::uint64_t seed) {
  if (ratio <= 0.0 || ratio >= 1.0)
    fail(ErrorCode::invalid_data, "split ratio must be in (0,1)");
  if (!is_feature(data))
    fail(ErrorCode::unsupported_mode,
         "proximity data cannot be split along variables");
  const auto& f = std::get<FeatureDataset>(data);

  std::vector<std::string> sorted = f.variable_ids;
  std::sort(sorted.begin(), sorted.end());
  Rng rng(seed);
  rng.shuffle(sorted);
  auto p1 = static_cast<std::size_t>(
      std::ceil(ratio * static_cast<double>(sorted.size())));
  check_part_sizes(p1, sorted.size() - p1, "variables");
  std::unordered_set<std::string> discovery_vars(
      sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(p1));

  std::vector<std::size_t> d_cols, v_cols;
  for (std::size_t j = 0; j < f.n_variables(); ++j) {
    if (discovery_vars.count(f.variable_ids[j])) d_cols.push_back(j);
    else v_cols.push_back(j);
  }

  SplitPair pair;
  pair.mode = SplitMode::descriptive;
  pair.ratio = ratio;
  pair.seed = seed;
  pair.discovery = take_variables(f, d_cols);
  pair.validation = take_variables(f, v_cols);
  return pair;
}

namespace {

std::vector<std::string> sorted_copy(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  return v;
}

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size() && i < 8; ++i) {
    if (i) out += ", ";
    out += ids[i];
  }
  if (ids.size() > 8) out += ", ...";
  return out;
}

// Reorders validation columns to discovery's variable order.
FeatureDataset realign_columns(const FeatureDataset& v,
                               const std::vector<std::string>& order) {
  std::vector<std::size_t> cols;
  for (const auto& id : order) {
    auto it = std::find(v.variable_ids.begin(), v.variable_ids.end(), id);
    cols.push_back(static_cast<std::size_t>(it - v.variable_ids.begin()));
  }
  return take_variables(v, cols);
}

FeatureDataset realign_rows(const FeatureDataset& v,
                            const std::vector<std::string>& order) {
  std::vector<std::size_t> rows;
  for (const auto& id : order) {
    auto it = std::find(v.object_ids.begin(), v.object_ids.end(), id);
    rows.push_back(static_cast<std::size_t>(it - v.object_ids.begin()));
  }
  return take_objects(v, rows);
}

}  // namespace

SplitPair ingest_pair(const Dataset& discovery, const Dataset& validation,
                      SplitMode mode) {
  SplitPair pair;
  pair.mode = mode;
  pair.ratio = 0.0;
  pair.seed = 0;

  if (mode == SplitMode::inferential) {
    const auto& d_ids = dataset_object_ids(discovery);
    const auto& v_ids = dataset_object_ids(validation);
    std::unordered_set<std::string> d_set(d_ids.begin(), d_ids.end());
    std::vector<std::string> overlap;
    for (const auto& id : v_ids)
      if (d_set.count(id)) overlap.push_back(id);
    if (!overlap.empty())
      fail(ErrorCode::schema_mismatch,
           "inferential pair has overlapping object ids: " + join_ids(overlap));
    if (is_feature(discovery) != is_feature(validation))
      fail(ErrorCode::schema_mismatch,
           "discovery and validation datasets have different forms");
    if (is_feature(discovery)) {
      const auto& df = std::get<FeatureDataset>(discovery);
      const auto& vf = std::get<FeatureDataset>(validation);
      if (sorted_copy(df.variable_ids) != sorted_copy(vf.variable_ids))
        fail(ErrorCode::schema_mismatch,
             "variable ids differ between discovery and validation files");
      pair.discovery = df;
      pair.validation = vf.variable_ids == df.variable_ids
                            ? vf
                            : realign_columns(vf, df.variable_ids);
    } else {
      pair.discovery = discovery;
      pair.validation = validation;
    }
  } else {
    if (!is_feature(discovery) || !is_feature(validation)) {
      // Descriptive dissimilarity pairs: same objects, dissimilarities
      // from another source.
      const auto& d_ids = dataset_object_ids(discovery);
      if (sorted_copy(d_ids) != sorted_copy(dataset_object_ids(validation)))
        fail(ErrorCode::schema_mismatch,
             "descriptive pair must cover the identical object set");
      pair.discovery = discovery;
      pair.validation = validation;
      return pair;
    }
    const auto& df = std::get<FeatureDataset>(discovery);
    const auto& vf = std::get<FeatureDataset>(validation);
    if (sorted_copy(df.object_ids) != sorted_copy(vf.object_ids))
      fail(ErrorCode::schema_mismatch,
           "descriptive pair must cover the identical object set");
    std::unordered_set<std::string> d_vars(df.variable_ids.begin(),
                                           df.variable_ids.end());
    std::vector<std::string> shared;
    for (const auto& id : vf.variable_ids)
      if (d_vars.count(id)) shared.push_back(id);
    if (!shared.empty())
      fail(ErrorCode::schema_mismatch,
           "descriptive pair has overlapping variable ids: " + join_ids(shared));
    pair.discovery = df;
    pair.validation = vf.object_ids == df.object_ids
                          ? vf
                          : realign_rows(vf, df.object_ids);
  }
  return pair;
}

}  // namespace cval
