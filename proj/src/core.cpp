#include "cval/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "cval/kernels.hpp"

namespace cval {

const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::invalid_data: return "invalid_data";
    case ErrorCode::mismatched_objects: return "mismatched_objects";
    case ErrorCode::constant_variable: return "constant_variable";
    case ErrorCode::part_too_small: return "part_too_small";
    case ErrorCode::unsupported_mode: return "unsupported_mode";
    case ErrorCode::schema_mismatch: return "schema_mismatch";
    case ErrorCode::invalid_k: return "invalid_k";
    case ErrorCode::insufficient_dissimilarity: return "insufficient_dissimilarity";
    case ErrorCode::rule_mode_mismatch: return "rule_mode_mismatch";
    case ErrorCode::undefined_index: return "undefined_index";
    case ErrorCode::undefined_test: return "undefined_test";
    case ErrorCode::meaningless_combination: return "meaningless_combination";
    case ErrorCode::seal_violation: return "seal_violation";
    case ErrorCode::no_method: return "no_method";
    case ErrorCode::replicate_failed: return "replicate_failed";
    case ErrorCode::io_error: return "io_error";
  }
  return "unknown";
}

namespace {

void require_unique(const std::vector<std::string>& ids, const char* what) {
  std::unordered_set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second)
      fail(ErrorCode::invalid_data,
           std::string("duplicate ") + what + " id: " + id);
  }
}

void require_finite(const Matrix& m, const char* what) {
  for (double v : m.data())
    if (!std::isfinite(v))
      fail(ErrorCode::invalid_data,
           std::string("non-finite entry in ") + what);
}

}  // namespace

FeatureDataset FeatureDataset::create(Matrix values,
                                      std::vector<std::string> object_ids,
                                      std::vector<std::string> variable_ids) {
  if (values.rows() != object_ids.size() || values.cols() != variable_ids.size())
    fail(ErrorCode::invalid_data, "feature matrix shape does not match id lists");
  if (values.rows() < 2)
    fail(ErrorCode::invalid_data, "feature dataset needs at least 2 objects");
  require_finite(values, "feature dataset");
  require_unique(object_ids, "object");
  require_unique(variable_ids, "variable");
  return FeatureDataset{std::move(values), std::move(object_ids),
                        std::move(variable_ids)};
}

DissimilarityDataset DissimilarityDataset::create(
    Matrix d, std::vector<std::string> object_ids) {
  if (d.rows() != d.cols() || d.rows() != object_ids.size())
    fail(ErrorCode::invalid_data, "dissimilarity matrix shape mismatch");
  require_unique(object_ids, "object");
  for (std::size_t i = 0; i < d.rows(); ++i) {
    if (d(i, i) != 0.0)
      fail(ErrorCode::invalid_data, "dissimilarity diagonal must be zero");
    for (std::size_t j = 0; j < d.cols(); ++j) {
      double v = d(i, j);
      if (!std::isfinite(v) || v < 0.0)
        fail(ErrorCode::invalid_data, "dissimilarities must be finite and >= 0");
      if (v != d(j, i))
        fail(ErrorCode::invalid_data, "dissimilarity matrix must be symmetric");
    }
  }
  return DissimilarityDataset{std::move(d), std::move(object_ids)};
}

Partition Partition::create(std::vector<int> labels, int k,
                            std::vector<std::string> object_ids) {
  if (labels.size() != object_ids.size())
    fail(ErrorCode::invalid_data, "partition labels/ids length mismatch");
  if (k <= 0 || static_cast<std::size_t>(k) > labels.size())
    fail(ErrorCode::invalid_data, "partition k out of range");
  for (int l : labels)
    if (l < 1 || l > k)
      fail(ErrorCode::invalid_data, "partition label outside 1..k");
  require_unique(object_ids, "object");
  return Partition{std::move(labels), k, std::move(object_ids)};
}

std::vector<std::size_t> Partition::cluster_sizes() const {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (int l : labels) ++sizes[static_cast<std::size_t>(l - 1)];
  return sizes;
}

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kmeans: return "kmeans";
    case Algorithm::hierarchical: return "hierarchical";
    case Algorithm::pam: return "pam";
  }
  return "?";
}
std::string to_string(Preprocessing p) {
  return p == Preprocessing::none ? "none" : "standardize";
}
std::string to_string(Linkage l) {
  switch (l) {
    case Linkage::single: return "single";
    case Linkage::complete: return "complete";
    case Linkage::average: return "average";
  }
  return "?";
}

Algorithm algorithm_from_string(const std::string& s) {
  if (s == "kmeans") return Algorithm::kmeans;
  if (s == "hierarchical") return Algorithm::hierarchical;
  if (s == "pam") return Algorithm::pam;
  fail(ErrorCode::invalid_data, "unknown algorithm: " + s);
}
Preprocessing preprocessing_from_string(const std::string& s) {
  if (s == "none") return Preprocessing::none;
  if (s == "standardize") return Preprocessing::standardize;
  fail(ErrorCode::invalid_data, "unknown preprocessing: " + s);
}
Linkage linkage_from_string(const std::string& s) {
  if (s == "single") return Linkage::single;
  if (s == "complete") return Linkage::complete;
  if (s == "average") return Linkage::average;
  fail(ErrorCode::invalid_data, "unknown linkage: " + s);
}

void ClusteringMethod::validate() const {
  if (k < 1) fail(ErrorCode::invalid_k, "k must be positive");
  bool is_h = algorithm == Algorithm::hierarchical;
  bool is_km = algorithm == Algorithm::kmeans;
  if (linkage.has_value() != is_h)
    fail(ErrorCode::invalid_data, "linkage present iff algorithm=hierarchical");
  if (seed.has_value() != is_km || max_iter.has_value() != is_km ||
      n_restarts.has_value() != is_km)
    fail(ErrorCode::invalid_data,
         "seed/max_iter/n_restarts present iff algorithm=kmeans");
  if (is_km && (*max_iter < 1 || *n_restarts < 1))
    fail(ErrorCode::invalid_data, "max_iter and n_restarts must be positive");
}

std::string ClusteringMethod::describe() const {
  std::string s = to_string(algorithm) + "(k=" + std::to_string(k);
  if (linkage) s += ",linkage=" + to_string(*linkage);
  s += ",prep=" + to_string(preprocessing) + ")";
  return s;
}

Partition canonicalize(const Partition& p) {
  std::unordered_map<int, int> relabel;
  std::vector<int> out;
  out.reserve(p.labels.size());
  int next = 1;
  for (int l : p.labels) {
    auto [it, inserted] = relabel.emplace(l, next);
    if (inserted) ++next;
    out.push_back(it->second);
  }
  return Partition::create(std::move(out), next - 1, p.object_ids);
}

std::vector<std::vector<long long>> contingency_table(const Partition& p1,
                                                      const Partition& p2) {
  if (p1.object_ids != p2.object_ids)
    fail(ErrorCode::mismatched_objects,
         "partitions are not over the identical object sequence");
  std::vector<std::vector<long long>> table(
      static_cast<std::size_t>(p1.k),
      std::vector<long long>(static_cast<std::size_t>(p2.k), 0));
  for (std::size_t i = 0; i < p1.labels.size(); ++i)
    ++table[static_cast<std::size_t>(p1.labels[i] - 1)]
           [static_cast<std::size_t>(p2.labels[i] - 1)];
  return table;
}

StandardizedData standardize(const FeatureDataset& d) {
  std::size_t n = d.n_objects(), p = d.n_variables();
  StandardizationParams params;
  params.mean.resize(p);
  params.sd.resize(p);
  for (std::size_t j = 0; j < p; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += d.values(i, j);
    double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double c = d.values(i, j) - mean;
      ss += c * c;
    }
    double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (sd == 0.0)
      fail(ErrorCode::constant_variable,
           "variable has zero variance: " + d.variable_ids[j]);
    params.mean[j] = mean;
    params.sd[j] = sd;
  }
  FeatureDataset out = apply_standardization(d, params);
  return StandardizedData{std::move(out), std::move(params)};
}

FeatureDataset apply_standardization(const FeatureDataset& d,
                                     const StandardizationParams& params) {
  if (params.mean.size() != d.n_variables())
    fail(ErrorCode::schema_mismatch,
         "standardization params do not match variable count");
  Matrix out(d.n_objects(), d.n_variables());
  for (std::size_t i = 0; i < d.n_objects(); ++i)
    for (std::size_t j = 0; j < d.n_variables(); ++j)
      out(i, j) = (d.values(i, j) - params.mean[j]) / params.sd[j];
  return FeatureDataset::create(std::move(out), d.object_ids, d.variable_ids);
}

DissimilarityDataset euclidean_dissimilarity(const FeatureDataset& d) {
  std::size_t n = d.n_objects();
  const auto& k = kernels::ops();
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    auto ri = d.values.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      double dist = std::sqrt(
          k.squared_distance(ri.data(), d.values.row(j).data(), ri.size()));
      m(i, j) = dist;
      m(j, i) = dist;
    }
  }
  return DissimilarityDataset::create(std::move(m), d.object_ids);
}

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void fnv_bytes(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
}

void fnv_string(std::uint64_t& h, const std::string& s) {
  fnv_bytes(h, s.data(), s.size());
  fnv_bytes(h, "\x1f", 1);
}

void fnv_matrix(std::uint64_t& h, const Matrix& m) {
  std::uint64_t r = m.rows(), c = m.cols();
  fnv_bytes(h, &r, sizeof r);
  fnv_bytes(h, &c, sizeof c);
  for (double v : m.data()) {
    char buf[40];
    int len = std::snprintf(buf, sizeof buf, "%a", v);
    fnv_bytes(h, buf, static_cast<std::size_t>(len));
  }
}

}  // namespace

std::uint64_t content_hash(const FeatureDataset& d) {
  std::uint64_t h = kFnvOffset;
  for (const auto& id : d.object_ids) fnv_string(h, id);
  for (const auto& id : d.variable_ids) fnv_string(h, id);
  fnv_matrix(h, d.values);
  return h;
}

std::uint64_t content_hash(const DissimilarityDataset& d) {
  std::uint64_t h = kFnvOffset;
  for (const auto& id : d.object_ids) fnv_string(h, id);
  fnv_matrix(h, d.d);
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& path) {
  const char* b = s.data();
  const char* e = b + s.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(b, e, v);
  while (ptr < e && (*ptr == ' ' || *ptr == '\t')) ++ptr;
  if (ec != std::errc() || ptr != e)
    fail(ErrorCode::io_error, "bad numeric value '" + s + "' in " + path);
  return v;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open " + path);
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (first) {
      t.header = std::move(fields);
      first = false;
    } else {
      t.rows.push_back(std::move(fields));
    }
  }
  if (first) fail(ErrorCode::io_error, "empty CSV file: " + path);
  return t;
}

}  // namespace

FeatureDataset read_feature_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  if (t.header.size() < 2)
    fail(ErrorCode::io_error, "feature CSV needs id column plus data: " + path);
  std::vector<std::string> variable_ids(t.header.begin() + 1, t.header.end());
  std::vector<std::string> object_ids;
  Matrix values(t.rows.size(), variable_ids.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    if (row.size() != t.header.size())
      fail(ErrorCode::io_error, "ragged CSV row in " + path);
    object_ids.push_back(row[0]);
    for (std::size_t j = 0; j < variable_ids.size(); ++j)
      values(i, j) = parse_double(row[j + 1], path);
  }
  return FeatureDataset::create(std::move(values), std::move(object_ids),
                                std::move(variable_ids));
}

DissimilarityDataset read_dissimilarity_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  std::vector<std::string> header_ids(t.header.begin() + 1, t.header.end());
  std::vector<std::string> object_ids;
  Matrix d(t.rows.size(), header_ids.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    if (row.size() != t.header.size())
      fail(ErrorCode::io_error, "ragged CSV row in " + path);
    object_ids.push_back(row[0]);
    for (std::size_t j = 0; j < header_ids.size(); ++j)
      d(i, j) = parse_double(row[j + 1], path);
  }
  if (object_ids != header_ids)
    fail(ErrorCode::io_error,
         "dissimilarity CSV row ids must match column ids: " + path);
  return DissimilarityDataset::create(std::move(d), std::move(object_ids));
}

Partition read_partition_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  std::vector<std::string> object_ids;
  std::vector<int> labels;
  int k = 0;
  for (const auto& row : t.rows) {
    if (row.size() != 2)
      fail(ErrorCode::io_error, "partition CSV needs two columns: " + path);
    object_ids.push_back(row[0]);
    int l = static_cast<int>(parse_double(row[1], path));
    labels.push_back(l);
    k = std::max(k, l);
  }
  return Partition::create(std::move(labels), k, std::move(object_ids));
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io_error, "cannot write " + path);
  return out;
}

}  // namespace

void write_feature_csv(const FeatureDataset& d, const std::string& path) {
  auto out = open_out(path);
  out << "object_id";
  for (const auto& v : d.variable_ids) out << ',' << v;
  out << '\n';
  for (std::size_t i = 0; i < d.n_objects(); ++i) {
    out << d.object_ids[i];
    for (std::size_t j = 0; j < d.n_variables(); ++j)
      out << ',' << format_double(d.values(i, j));
    out << '\n';
  }
}

void write_dissimilarity_csv(const DissimilarityDataset& d,
                             const std::string& path) {
  auto out = open_out(path);
  out << "object_id";
  for (const auto& v : d.object_ids) out << ',' << v;
  out << '\n';
  for (std::size_t i = 0; i < d.n_objects(); ++i) {
    out << d.object_ids[i];
    for (std::size_t j = 0; j < d.n_objects(); ++j)
      out << ',' << format_double(d.d(i, j));
    out << '\n';
  }
}

void write_partition_csv(const Partition& p, const std::string& path) {
  auto out = open_out(path);
  out << "object_id,label\n";
  for (std::size_t i = 0; i < p.labels.size(); ++i)
    out << p.object_ids[i] << ',' << p.labels[i] << '\n';
}

}  // namespace cval
