#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "cval/cluster.hpp"
#include "cval/indices.hpp"
#include "cval/match.hpp"
#include "cval/nulltest.hpp"
#include "cval/split.hpp"
#include "cval/transfer.hpp"

namespace cval {

// Holds the validation data behind a content hash during Step 1. Every
// read goes through open(), which verifies the hash and counts the
// access; Step-1 code never receives the handle.
class SealedDataset {
 public:
  explicit SealedDataset(Dataset data)
      : data_(std::move(data)), hash_(dataset_hash(data_)) {}

  std::uint64_t hash() const { return hash_; }
  std::uint64_t open_count() const { return opens_; }

  const Dataset& open() const {
    if (dataset_hash(data_) != hash_)
      fail(ErrorCode::seal_violation,
           "validation data changed after sealing (hash mismatch)");
    ++opens_;
    return data_;
  }

 private:
  Dataset data_;
  std::uint64_t hash_;
  mutable std::uint64_t opens_ = 0;
};

enum class Variant { method_based, result_based };
std::string to_string(Variant v);

// ---- Step 1 ----------------------------------------------------------

struct SelectionRow {
  ClusteringMethod method;
  double criterion = 0.0;
  bool failed = false;
  std::string error;
};

struct SelectionResult {
  ClusteringMethod best;
  std::string criterion;
  std::vector<SelectionRow> ranking;  // candidate order, failed rows kept
};

// Relative validation on discovery data only. When a seal is supplied,
// passing the sealed dataset itself as d1 is a protocol violation.
SelectionResult select_method(const Dataset& d1,
                              const std::vector<ClusteringMethod>& candidates,
                              const std::string& criterion,
                              const SealedDataset* seal = nullptr);

// ---- Step 2 ----------------------------------------------------------

struct ValidationContext {
  SplitPair pair;
  ClusteringMethod method;
  ClusterModel model1;                     // C1 on D1
  std::optional<ClusterModel> c2md;        // method rerun on D2
  std::optional<Partition> c2tf;           // transfer of C1 to D2
  std::optional<ClusterMatching> matching; // C2md clusters -> C1 clusters
  std::uint64_t seal_hash = 0;
};

// Fits C1, reruns the method on D2, transfers, and matches. The seal
// hash must come from a SealedDataset recorded before Step 1.
ValidationContext make_context(const SplitPair& pair,
                               const ClusteringMethod& method,
                               std::uint64_t seal_hash);

struct IndexComparison {
  std::string name;
  Direction direction = Direction::higher_better;
  std::optional<double> discovery;
  std::optional<double> validation;
  // Signed so that positive always means "worse on validation data".
  std::optional<double> optimism_gap;
  std::string note;
};

struct MatchedCluster {
  int validation_cluster = 0;
  int discovery_cluster = 0;
  double share_discovery = 0.0;
  double share_validation = 0.0;
  std::vector<double> centroid_discovery;
  std::vector<double> centroid_validation;
  std::optional<double> centroid_distance;
};

struct VariableDescriptor {
  std::string variable;
  std::optional<double> f_discovery;
  std::optional<double> f_validation;
};

struct InternalSection {
  Variant variant = Variant::method_based;
  std::vector<IndexComparison> indices;
  std::optional<ClusterMatching> matching;
  std::vector<MatchedCluster> matched_clusters;
  std::vector<VariableDescriptor> top_variables;
  std::vector<std::string> notes;
};

// External information: either a per-object variable (categorical or
// numeric) or a reference partition.
struct ExternalVariable {
  std::string name;
  bool numeric = false;
  std::unordered_map<std::string, std::string> values;  // keyed by object id
};

struct ExternalSection {
  Variant variant = Variant::method_based;
  std::optional<AssociationTest> discovery_test;
  std::optional<AssociationTest> validation_test;
  std::vector<IndexComparison> reference_indices;  // vs reference partition
  std::vector<std::string> notes;
};

struct StabilitySection {
  std::vector<IndexValue> agreement;  // ari / jaccard / fm
  std::vector<std::vector<long long>> matched_contingency;
  std::optional<MonteCarloResult> null_reference;
  std::string compared;  // which partitions were compared
};

struct ScoreRow {
  std::string object_id;
  double pc1 = 0.0, pc2 = 0.0;
  int cluster = 0;
  std::string dataset;  // discovery / validation / null
};

struct SilhouetteRow {
  std::string object_id;
  int cluster = 0;
  double s_value = 0.0;
  int order = 0;
  std::string dataset;
};

struct VisualSection {
  Variant variant = Variant::method_based;
  std::vector<ScoreRow> scores;
  std::vector<SilhouetteRow> silhouettes;
  bool projection_skipped = false;
  std::vector<std::string> notes;
};

InternalSection validate_internal(ValidationContext& ctx, Variant variant);
ExternalSection validate_external(ValidationContext& ctx, Variant variant,
                                  const ExternalVariable& external);
ExternalSection validate_external(ValidationContext& ctx, Variant variant,
                                  const Partition& reference);
StabilitySection validate_stability(ValidationContext& ctx);
VisualSection validate_visual(ValidationContext& ctx, Variant variant,
                              std::optional<NullKind> null_counterpart = {},
                              std::uint64_t null_seed = 0);

// ---- Full protocol ---------------------------------------------------

struct ProtocolConfig {
  // Either a single data file to split, or a pre-split pair.
  std::string data_file;
  std::string discovery_file;
  std::string validation_file;
  bool dissimilarity_input = false;
  SplitMode mode = SplitMode::inferential;
  double ratio = 0.5;
  std::uint64_t seed = 1;

  std::vector<ClusteringMethod> candidates;
  std::string criterion = "asw";

  std::set<std::string> aspects = {"int", "ext", "vis", "stab"};
  std::vector<Variant> variants = {Variant::method_based,
                                   Variant::result_based};

  std::string external_variable_file;   // optional, csv object_id,value
  std::string external_partition_file;  // optional
  std::optional<NullKind> null_kind;
  int null_replicates = 99;

  std::string out_dir;  // plot CSVs + report files; empty = no artifacts
  int workers = 1;

  // User-declared threshold, echoed verbatim (never a computed verdict).
  std::optional<double> declared_threshold;
  std::string declared_threshold_index = "asw";

  // Invoked right after Step 1 finishes and before the seal is
  // re-verified. Not serialized; exists so tests and progress reporting
  // can observe the Step-1/Step-2 boundary.
  std::function<void()> after_selection;
};

struct AspectFailure {
  std::string aspect;
  std::string error;
};

struct ValidationReport {
  std::string toolkit_version;
  ProtocolConfig config;
  SelectionResult selection;
  ClusteringMethod method;
  std::string discovery_hash;
  std::string validation_seal_hash;
  std::optional<InternalSection> internal_method, internal_result;
  std::optional<ExternalSection> external_method, external_result;
  std::optional<StabilitySection> stability;
  std::optional<VisualSection> visual_method, visual_result;
  std::vector<AspectFailure> failures;
  std::vector<std::string> caveats;
};

ValidationReport run_protocol(const ProtocolConfig& config);

std::string report_to_json(const ValidationReport& report);
std::string report_to_markdown(const ValidationReport& report);
// Writes report.json, report.md and plots/*.csv under out_dir.
void write_report_artifacts(const ValidationReport& report,
                            const std::string& out_dir);

// JSON round-trips for the CLI artifacts.
std::string method_to_json(const ClusteringMethod& m);
ClusteringMethod method_from_json(const std::string& text);
std::string model_to_json(const ClusterModel& m);
ClusterModel model_from_json(const std::string& text);
std::string mc_result_to_json(const MonteCarloResult& r);

// Principal-axis fit used by the visual section; exposed for testing.
// Loadings are column eigenvectors of the covariance of the centered
// data, each scaled so its largest-magnitude component is positive.
struct ProjectionBasis {
  std::vector<double> center;
  Matrix loadings;  // p x 2
};
ProjectionBasis fit_projection(const FeatureDataset& data);
void project_points(const FeatureDataset& data, const ProjectionBasis& basis,
                    std::vector<std::pair<double, double>>& out);

}  // namespace cval
