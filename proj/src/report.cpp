#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cval/engine.hpp"
#include "cval/rng.hpp"

namespace cval {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------
// JSON building blocks.
// ---------------------------------------------------------------------

namespace {

json j_method(const ClusteringMethod& m) {
  json j;
  j["algorithm"] = to_string(m.algorithm);
  j["k"] = m.k;
  j["preprocessing"] = to_string(m.preprocessing);
  if (m.linkage) j["linkage"] = to_string(*m.linkage);
  if (m.seed) j["seed"] = *m.seed;
  if (m.max_iter) j["max_iter"] = *m.max_iter;
  if (m.n_restarts) j["n_restarts"] = *m.n_restarts;
  return j;
}

ClusteringMethod method_from(const json& j) {
  ClusteringMethod m;
  m.algorithm = algorithm_from_string(j.at("algorithm").get<std::string>());
  m.k = j.at("k").get<int>();
  m.preprocessing =
      preprocessing_from_string(j.at("preprocessing").get<std::string>());
  if (j.contains("linkage"))
    m.linkage = linkage_from_string(j.at("linkage").get<std::string>());
  if (j.contains("seed")) m.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("max_iter")) m.max_iter = j.at("max_iter").get<int>();
  if (j.contains("n_restarts")) m.n_restarts = j.at("n_restarts").get<int>();
  m.validate();
  return m;
}

json j_matrix(const Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from(const json& j) {
  std::size_t rows = j.size();
  std::size_t cols = rows ? j.at(0).size() : 0;
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t c = 0; c < cols; ++c) m(i, c) = j.at(i).at(c).get<double>();
  return m;
}

json j_partition(const Partition& p) {
  json j;
  j["k"] = p.k;
  j["object_ids"] = p.object_ids;
  j["labels"] = p.labels;
  return j;
}

Partition partition_from(const json& j) {
  return Partition::create(j.at("labels").get<std::vector<int>>(),
                           j.at("k").get<int>(),
                           j.at("object_ids").get<std::vector<std::string>>());
}

json j_index_value(const IndexValue& v) {
  json j;
  j["name"] = v.name;
  j["value"] = v.value;
  j["direction"] = to_string(v.direction);
  if (!v.per_cluster.empty()) {
    json pc = json::array();
    for (const auto& [cluster, value] : v.per_cluster)
      pc.push_back({{"cluster", cluster}, {"value", value}});
    j["per_cluster"] = std::move(pc);
  }
  if (v.degenerate) j["degenerate"] = true;
  if (!v.note.empty()) j["note"] = v.note;
  return j;
}

json j_index_comparison(const IndexComparison& c) {
  json j;
  j["name"] = c.name;
  j["direction"] = to_string(c.direction);
  if (c.discovery) j["discovery"] = *c.discovery;
  if (c.validation) j["validation"] = *c.validation;
  if (c.optimism_gap) j["optimism_gap"] = *c.optimism_gap;
  if (!c.note.empty()) j["note"] = c.note;
  return j;
}

json j_association(const AssociationTest& t) {
  json j;
  j["name"] = t.name;
  j["statistic"] = t.statistic;
  j["df1"] = t.df1;
  j["df2"] = t.df2;
  j["p_value"] = t.p_value;
  if (t.degenerate) j["degenerate"] = true;
  if (!t.warning.empty()) j["warning"] = t.warning;
  return j;
}

json j_matching(const ClusterMatching& m) {
  json j;
  json rows = json::array();
  for (const auto& e : m.assignment)
    rows.push_back({{"validation_cluster", e.validation_cluster},
                    {"discovery_cluster", e.discovery_cluster},
                    {"contribution", e.contribution}});
  j["assignment"] = std::move(rows);
  j["unpaired_validation"] = m.unpaired_validation;
  j["unpaired_discovery"] = m.unpaired_discovery;
  j["objective_value"] = m.objective_value;
  j["strategy"] = to_string(m.strategy);
  return j;
}

json j_mc(const MonteCarloResult& r) {
  json j;
  j["statistic"] = r.statistic_name;
  j["direction"] = to_string(r.direction);
  j["t_observed"] = r.t_observed;
  j["replicates"] = r.replicates;
  j["p_value"] = r.p_value;
  j["t_null"] = r.t_null;
  return j;
}

json j_internal(const InternalSection& s) {
  json j;
  j["variant"] = to_string(s.variant);
  json idx = json::array();
  for (const auto& c : s.indices) idx.push_back(j_index_comparison(c));
  j["indices"] = std::move(idx);
  if (s.matching) j["matching"] = j_matching(*s.matching);
  json clusters = json::array();
  for (const auto& mc : s.matched_clusters) {
    json c;
    c["validation_cluster"] = mc.validation_cluster;
    c["discovery_cluster"] = mc.discovery_cluster;
    c["share_discovery"] = mc.share_discovery;
    c["share_validation"] = mc.share_validation;
    if (!mc.centroid_discovery.empty())
      c["centroid_discovery"] = mc.centroid_discovery;
    if (!mc.centroid_validation.empty())
      c["centroid_validation"] = mc.centroid_validation;
    if (mc.centroid_distance) c["centroid_distance"] = *mc.centroid_distance;
    clusters.push_back(std::move(c));
  }
  j["matched_clusters"] = std::move(clusters);
  json vars = json::array();
  for (const auto& v : s.top_variables) {
    json jv;
    jv["variable"] = v.variable;
    if (v.f_discovery) jv["f_discovery"] = *v.f_discovery;
    if (v.f_validation) jv["f_validation"] = *v.f_validation;
    vars.push_back(std::move(jv));
  }
  j["top_variables"] = std::move(vars);
  if (!s.notes.empty()) j["notes"] = s.notes;
  return j;
}

json j_external(const ExternalSection& s) {
  json j;
  j["variant"] = to_string(s.variant);
  if (s.discovery_test) j["discovery_test"] = j_association(*s.discovery_test);
  if (s.validation_test)
    j["validation_test"] = j_association(*s.validation_test);
  if (!s.reference_indices.empty()) {
    json idx = json::array();
    for (const auto& c : s.reference_indices)
      idx.push_back(j_index_comparison(c));
    j["reference_indices"] = std::move(idx);
  }
  if (!s.notes.empty()) j["notes"] = s.notes;
  return j;
}

json j_stability(const StabilitySection& s) {
  json j;
  j["compared"] = s.compared;
  json agr = json::array();
  for (const auto& v : s.agreement) agr.push_back(j_index_value(v));
  j["agreement"] = std::move(agr);
  j["matched_contingency"] = s.matched_contingency;
  if (s.null_reference) j["null_reference"] = j_mc(*s.null_reference);
  return j;
}

json j_visual(const VisualSection& s) {
  json j;
  j["variant"] = to_string(s.variant);
  j["projection_skipped"] = s.projection_skipped;
  json scores = json::array();
  for (const auto& r : s.scores)
    scores.push_back({{"object_id", r.object_id},
                      {"pc1", r.pc1},
                      {"pc2", r.pc2},
                      {"cluster", r.cluster},
                      {"dataset", r.dataset}});
  j["scores"] = std::move(scores);
  json sil = json::array();
  for (const auto& r : s.silhouettes)
    sil.push_back({{"object_id", r.object_id},
                   {"cluster", r.cluster},
                   {"s_value", r.s_value},
                   {"order", r.order},
                   {"dataset", r.dataset}});
  j["silhouettes"] = std::move(sil);
  if (!s.notes.empty()) j["notes"] = s.notes;
  return j;
}

json j_config(const ProtocolConfig& c) {
  json j;
  if (!c.data_file.empty()) j["data_file"] = c.data_file;
  if (!c.discovery_file.empty()) j["discovery_file"] = c.discovery_file;
  if (!c.validation_file.empty()) j["validation_file"] = c.validation_file;
  j["dissimilarity_input"] = c.dissimilarity_input;
  j["mode"] = to_string(c.mode);
  j["ratio"] = c.ratio;
  j["seed"] = c.seed;
  json cands = json::array();
  for (const auto& m : c.candidates) cands.push_back(j_method(m));
  j["candidates"] = std::move(cands);
  j["criterion"] = c.criterion;
  j["aspects"] = std::vector<std::string>(c.aspects.begin(), c.aspects.end());
  std::vector<std::string> variants;
  for (auto v : c.variants) variants.push_back(to_string(v));
  j["variants"] = variants;
  if (!c.external_variable_file.empty())
    j["external_variable_file"] = c.external_variable_file;
  if (!c.external_partition_file.empty())
    j["external_partition_file"] = c.external_partition_file;
  if (c.null_kind) j["null_model"] = to_string(*c.null_kind);
  j["null_replicates"] = c.null_replicates;
  // Worker count is an execution detail; the report must not depend on
  // it, so it stays out of the echoed config.
  if (!c.out_dir.empty()) j["out_dir"] = c.out_dir;
  if (c.declared_threshold) {
    j["declared_threshold"] = *c.declared_threshold;
    j["declared_threshold_index"] = c.declared_threshold_index;
  }
  return j;
}

json j_selection(const SelectionResult& s) {
  json j;
  j["criterion"] = s.criterion;
  j["best"] = j_method(s.best);
  json rows = json::array();
  for (const auto& r : s.ranking) {
    json row;
    row["method"] = j_method(r.method);
    if (r.failed) {
      row["failed"] = true;
      row["error"] = r.error;
    } else {
      row["criterion"] = r.criterion;
    }
    rows.push_back(std::move(row));
  }
  j["ranking"] = std::move(rows);
  return j;
}

}  // namespace

std::string method_to_json(const ClusteringMethod& m) {
  return j_method(m).dump(2);
}

ClusteringMethod method_from_json(const std::string& text) {
  try {
    return method_from(json::parse(text));
  } catch (const json::exception& e) {
    fail(ErrorCode::schema_mismatch,
         std::string("bad method json: ") + e.what());
  }
}

std::string model_to_json(const ClusterModel& m) {
  json j;
  j["method"] = j_method(m.method);
  j["partition"] = j_partition(m.partition);
  if (m.centroids) j["centroids"] = j_matrix(*m.centroids);
  if (m.medoid_ids) j["medoid_ids"] = *m.medoid_ids;
  if (m.medoid_coords) j["medoid_coords"] = j_matrix(*m.medoid_coords);
  if (m.merge_trace) {
    json trace = json::array();
    for (const auto& step : *m.merge_trace)
      trace.push_back({{"a", step.a}, {"b", step.b}, {"height", step.height}});
    j["merge_trace"] = std::move(trace);
  }
  if (m.standardization) {
    j["standardization"] = {{"mean", m.standardization->mean},
                            {"sd", m.standardization->sd}};
  }
  if (m.objective) j["objective"] = *m.objective;
  return j.dump(2);
}

ClusterModel model_from_json(const std::string& text) {
  try {
    json j = json::parse(text);
    ClusterModel m;
    m.method = method_from(j.at("method"));
    m.partition = partition_from(j.at("partition"));
    if (j.contains("centroids")) m.centroids = matrix_from(j.at("centroids"));
    if (j.contains("medoid_ids"))
      m.medoid_ids = j.at("medoid_ids").get<std::vector<std::string>>();
    if (j.contains("medoid_coords"))
      m.medoid_coords = matrix_from(j.at("medoid_coords"));
    if (j.contains("merge_trace")) {
      std::vector<ClusterModel::Merge> trace;
      for (const auto& step : j.at("merge_trace"))
        trace.push_back({step.at("a").get<int>(), step.at("b").get<int>(),
                         step.at("height").get<double>()});
      m.merge_trace = std::move(trace);
    }
    if (j.contains("standardization")) {
      StandardizationParams params;
      params.mean =
          j.at("standardization").at("mean").get<std::vector<double>>();
      params.sd = j.at("standardization").at("sd").get<std::vector<double>>();
      m.standardization = std::move(params);
    }
    if (j.contains("objective")) m.objective = j.at("objective").get<double>();
    return m;
  } catch (const json::exception& e) {
    fail(ErrorCode::schema_mismatch,
         std::string("bad model json: ") + e.what());
  }
}

std::string mc_result_to_json(const MonteCarloResult& r) {
  return j_mc(r).dump(2);
}

// ---------------------------------------------------------------------
// External inputs.
// ---------------------------------------------------------------------

namespace {

ExternalVariable read_external_variable(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open " + path);
  ExternalVariable ext;
  std::string line;
  if (!std::getline(in, line))
    fail(ErrorCode::invalid_data, "empty external variable file: " + path);
  auto comma = line.find(',');
  if (comma == std::string::npos)
    fail(ErrorCode::invalid_data,
         "external variable file needs two columns: " + path);
  ext.name = line.substr(comma + 1);
  ext.numeric = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    comma = line.find(',');
    if (comma == std::string::npos)
      fail(ErrorCode::invalid_data, "malformed row in " + path + ": " + line);
    std::string id = line.substr(0, comma);
    std::string value = line.substr(comma + 1);
    if (!ext.values.emplace(id, value).second)
      fail(ErrorCode::invalid_data, "duplicate object id in " + path + ": " + id);
    if (ext.numeric) {
      try {
        std::size_t pos = 0;
        (void)std::stod(value, &pos);
        if (pos != value.size()) ext.numeric = false;
      } catch (const std::exception&) {
        ext.numeric = false;
      }
    }
  }
  if (ext.values.empty())
    fail(ErrorCode::invalid_data, "no rows in external variable file: " + path);
  return ext;
}

Dataset load_dataset(const std::string& path, bool dissimilarity) {
  if (dissimilarity) return Dataset{read_dissimilarity_csv(path)};
  return Dataset{read_feature_csv(path)};
}

}  // namespace

// ---------------------------------------------------------------------
// Full protocol.
// ---------------------------------------------------------------------

ValidationReport run_protocol(const ProtocolConfig& config) {
  ValidationReport report;
  report.toolkit_version = "0.1.0";
  report.config = config;

  // Assemble the discovery/validation pair.
  SplitPair pair;
  bool ingest = config.data_file.empty();
  if (!ingest) {
    Dataset data = load_dataset(config.data_file, config.dissimilarity_input);
    pair = config.mode == SplitMode::inferential
               ? split_inferential(data, config.ratio, config.seed)
               : split_descriptive(data, config.ratio, config.seed);
  } else {
    if (config.discovery_file.empty() || config.validation_file.empty())
      fail(ErrorCode::invalid_data,
           "need either a data file or a discovery/validation pair");
    pair = ingest_pair(
        load_dataset(config.discovery_file, config.dissimilarity_input),
        load_dataset(config.validation_file, config.dissimilarity_input),
        config.mode);
  }
  report.discovery_hash = hash_hex(dataset_hash(pair.discovery));

  // Seal the validation data before Step 1 touches anything.
  SealedDataset seal(std::move(pair.validation));
  report.validation_seal_hash = hash_hex(seal.hash());

  report.selection =
      select_method(pair.discovery, config.candidates, config.criterion, &seal);
  report.method = report.selection.best;

  if (config.after_selection) config.after_selection();

  // For ingested pairs, catch edits to the validation file made while
  // Step 1 was running.
  if (ingest) {
    Dataset recheck =
        load_dataset(config.validation_file, config.dissimilarity_input);
    if (dataset_hash(recheck) != seal.hash())
      fail(ErrorCode::seal_violation,
           "validation file changed between sealing and validation: " +
               config.validation_file);
  }

  pair.validation = seal.open();
  ValidationContext ctx = make_context(pair, report.method, seal.hash());

  auto wants = [&](const char* aspect) {
    return report.config.aspects.count(aspect) > 0;
  };
  auto has_variant = [&](Variant v) {
    return std::find(config.variants.begin(), config.variants.end(), v) !=
           config.variants.end();
  };
  auto guard = [&](const std::string& aspect, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      report.failures.push_back({aspect, e.what()});
    }
  };

  if (wants("int")) {
    if (has_variant(Variant::method_based))
      guard("internal/method_based", [&] {
        report.internal_method =
            validate_internal(ctx, Variant::method_based);
      });
    if (has_variant(Variant::result_based))
      guard("internal/result_based", [&] {
        report.internal_result =
            validate_internal(ctx, Variant::result_based);
      });
  }

  if (wants("ext")) {
    std::optional<ExternalVariable> ext;
    std::optional<Partition> ref;
    guard("external/input", [&] {
      if (!config.external_variable_file.empty())
        ext = read_external_variable(config.external_variable_file);
      if (!config.external_partition_file.empty())
        ref = read_partition_csv(config.external_partition_file);
    });
    if (!ext && !ref)
      report.caveats.push_back(
          "External validation skipped: no external variable or reference "
          "partition was configured.");
    for (Variant v : {Variant::method_based, Variant::result_based}) {
      if (!ext && !ref) break;
      if (!has_variant(v)) continue;
      std::string tag = "external/" + to_string(v);
      guard(tag, [&] {
        if (ext) {
          ExternalSection s = validate_external(ctx, v, *ext);
          if (ref) {
            ExternalSection r = validate_external(ctx, v, *ref);
            s.reference_indices = std::move(r.reference_indices);
            s.notes.insert(s.notes.end(), r.notes.begin(), r.notes.end());
          }
          (v == Variant::method_based ? report.external_method
                                      : report.external_result) = std::move(s);
        } else if (ref) {
          (v == Variant::method_based ? report.external_method
                                      : report.external_result) =
              validate_external(ctx, v, *ref);
        }
      });
    }
  }

  if (wants("stab")) {
    guard("stability", [&] {
      StabilitySection s = validate_stability(ctx);
      if (config.null_kind && pair.mode == SplitMode::inferential &&
          is_feature(pair.discovery) && is_feature(pair.validation)) {
        s.null_reference = null_reference_validation(
            pair, report.method, "ari", *config.null_kind,
            config.null_replicates, Rng::substream(config.seed, 7).next_u64());
        report.caveats.push_back(
            "Null-model rejection can reflect any departure from "
            "homogeneity, not necessarily the clusters found; treat small "
            "p-values as evidence against the null model only.");
      }
      report.stability = std::move(s);
    });
  }

  if (wants("vis")) {
    std::uint64_t vis_seed = Rng::substream(config.seed, 11).next_u64();
    if (has_variant(Variant::method_based))
      guard("visual/method_based", [&] {
        report.visual_method = validate_visual(ctx, Variant::method_based,
                                               config.null_kind, vis_seed);
      });
    if (has_variant(Variant::result_based))
      guard("visual/result_based", [&] {
        report.visual_result = validate_visual(ctx, Variant::result_based,
                                               config.null_kind, vis_seed);
      });
  }

  if (config.declared_threshold) {
    report.caveats.push_back(
        "User-declared threshold on " + config.declared_threshold_index +
        ": " + format_double(*config.declared_threshold) +
        ". The toolkit reports values only; the pass/fail decision is the "
        "analyst's.");
  }

  if (!config.out_dir.empty()) write_report_artifacts(report, config.out_dir);
  return report;
}

// ---------------------------------------------------------------------
// Artifacts.
// ---------------------------------------------------------------------

std::string report_to_json(const ValidationReport& report) {
  json j;
  j["toolkit_version"] = report.toolkit_version;
  j["config"] = j_config(report.config);
  j["selection"] = j_selection(report.selection);
  j["method"] = j_method(report.method);
  j["discovery_hash"] = report.discovery_hash;
  j["validation_seal_hash"] = report.validation_seal_hash;
  if (report.internal_method)
    j["internal_method"] = j_internal(*report.internal_method);
  if (report.internal_result)
    j["internal_result"] = j_internal(*report.internal_result);
  if (report.external_method)
    j["external_method"] = j_external(*report.external_method);
  if (report.external_result)
    j["external_result"] = j_external(*report.external_result);
  if (report.stability) j["stability"] = j_stability(*report.stability);
  if (report.visual_method)
    j["visual_method"] = j_visual(*report.visual_method);
  if (report.visual_result)
    j["visual_result"] = j_visual(*report.visual_result);
  if (!report.failures.empty()) {
    json f = json::array();
    for (const auto& fail_row : report.failures)
      f.push_back({{"aspect", fail_row.aspect}, {"error", fail_row.error}});
    j["failures"] = std::move(f);
  }
  if (!report.caveats.empty()) j["caveats"] = report.caveats;
  return j.dump(2);
}

namespace {

void md_index_table(std::ostringstream& out,
                    const std::vector<IndexComparison>& indices) {
  out << "| index | direction | discovery | validation | optimism gap |\n";
  out << "|---|---|---|---|---|\n";
  for (const auto& c : indices) {
    auto cell = [](const std::optional<double>& v) {
      return v ? format_double(*v) : std::string("-");
    };
    out << "| " << c.name << " | " << to_string(c.direction) << " | "
        << cell(c.discovery) << " | " << cell(c.validation) << " | "
        << cell(c.optimism_gap) << " |\n";
  }
  out << "\n";
}

void md_internal(std::ostringstream& out, const char* title,
                 const InternalSection& s) {
  out << "## " << title << "\n\n";
  md_index_table(out, s.indices);
  if (!s.matched_clusters.empty()) {
    out << "| validation cluster | discovery cluster | share D1 | share D2 |"
           " centroid distance |\n|---|---|---|---|---|\n";
    for (const auto& mc : s.matched_clusters) {
      out << "| " << mc.validation_cluster << " | " << mc.discovery_cluster
          << " | " << format_double(mc.share_discovery) << " | "
          << format_double(mc.share_validation) << " | "
          << (mc.centroid_distance ? format_double(*mc.centroid_distance)
                                   : std::string("-"))
          << " |\n";
    }
    out << "\n";
  }
  if (!s.top_variables.empty()) {
    out << "Top characterising variables (between-cluster F):\n\n";
    out << "| variable | F on discovery | F on validation |\n|---|---|---|\n";
    for (const auto& v : s.top_variables) {
      out << "| " << v.variable << " | "
          << (v.f_discovery ? format_double(*v.f_discovery)
                            : std::string("-"))
          << " | "
          << (v.f_validation ? format_double(*v.f_validation)
                             : std::string("-"))
          << " |\n";
    }
    out << "\n";
  }
}

void md_external(std::ostringstream& out, const char* title,
                 const ExternalSection& s) {
  out << "## " << title << "\n\n";
  auto test_line = [&](const char* side, const AssociationTest& t) {
    out << "- " << side << ": " << t.name << " = "
        << format_double(t.statistic) << ", p = " << format_double(t.p_value);
    if (!t.warning.empty()) out << " (" << t.warning << ")";
    out << "\n";
  };
  if (s.discovery_test) test_line("discovery", *s.discovery_test);
  if (s.validation_test) test_line("validation", *s.validation_test);
  if (s.discovery_test || s.validation_test) out << "\n";
  if (!s.reference_indices.empty()) {
    out << "Agreement with the reference partition:\n\n";
    md_index_table(out, s.reference_indices);
  }
  for (const auto& note : s.notes) out << "- note: " << note << "\n";
  if (!s.notes.empty()) out << "\n";
}

}  // namespace

std::string report_to_markdown(const ValidationReport& report) {
  std::ostringstream out;
  out << "# Cluster validation report\n\n";
  out << "- toolkit version: " << report.toolkit_version << "\n";
  out << "- chosen method: " << report.method.describe() << "\n";
  out << "- selection criterion: " << report.selection.criterion << "\n";
  out << "- discovery data hash: " << report.discovery_hash << "\n";
  out << "- validation data hash (sealed): " << report.validation_seal_hash
      << "\n\n";

  out << "## Method selection on discovery data\n\n";
  out << "| method | " << report.selection.criterion << " |\n|---|---|\n";
  for (const auto& row : report.selection.ranking) {
    out << "| " << row.method.describe() << " | "
        << (row.failed ? "failed: " + row.error : format_double(row.criterion))
        << " |\n";
  }
  out << "\n";

  if (report.internal_method)
    md_internal(out, "Internal validation (method-based)",
                *report.internal_method);
  if (report.internal_result)
    md_internal(out, "Internal validation (result-based)",
                *report.internal_result);
  if (report.external_method)
    md_external(out, "External validation (method-based)",
                *report.external_method);
  if (report.external_result)
    md_external(out, "External validation (result-based)",
                *report.external_result);

  if (report.stability) {
    const auto& s = *report.stability;
    out << "## Stability\n\n";
    out << "Compared partitions: " << s.compared << "\n\n";
    for (const auto& v : s.agreement)
      out << "- " << v.name << " = " << format_double(v.value) << "\n";
    out << "\nMatched contingency table (rows in matching order):\n\n";
    for (const auto& row : s.matched_contingency) {
      out << "|";
      for (long long c : row) out << " " << c << " |";
      out << "\n";
    }
    out << "\n";
    if (s.null_reference) {
      const auto& mc = *s.null_reference;
      out << "Null reference: " << mc.statistic_name << " = "
          << format_double(mc.t_observed) << ", p = "
          << format_double(mc.p_value) << " (M = " << mc.replicates << ")\n\n";
    }
  }

  auto md_visual = [&](const char* title, const VisualSection& s) {
    out << "## " << title << "\n\n";
    if (s.projection_skipped)
      out << "Projection skipped.\n";
    else
      out << "Projection scores: " << s.scores.size()
          << " points (see plots/).\n";
    out << "Silhouette rows: " << s.silhouettes.size() << ".\n";
    for (const auto& note : s.notes) out << "- note: " << note << "\n";
    out << "\n";
  };
  if (report.visual_method)
    md_visual("Visual validation (method-based)", *report.visual_method);
  if (report.visual_result)
    md_visual("Visual validation (result-based)", *report.visual_result);

  if (!report.failures.empty()) {
    out << "## Failed aspects\n\n";
    for (const auto& f : report.failures)
      out << "- " << f.aspect << ": " << f.error << "\n";
    out << "\n";
  }
  if (!report.caveats.empty()) {
    out << "## Caveats\n\n";
    for (const auto& c : report.caveats) out << "- " << c << "\n";
  }
  return out.str();
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io_error, "cannot write " + path.string());
  out << text;
}

void write_scores_csv(const fs::path& path,
                      const std::vector<ScoreRow>& rows) {
  std::ostringstream out;
  out << "object_id,pc1,pc2,cluster,dataset\n";
  for (const auto& r : rows)
    out << r.object_id << "," << format_double(r.pc1) << ","
        << format_double(r.pc2) << "," << r.cluster << "," << r.dataset
        << "\n";
  write_text(path, out.str());
}

void write_silhouettes_csv(const fs::path& path,
                           const std::vector<SilhouetteRow>& rows) {
  std::ostringstream out;
  out << "object_id,cluster,s_value,order,dataset\n";
  for (const auto& r : rows)
    out << r.object_id << "," << r.cluster << "," << format_double(r.s_value)
        << "," << r.order << "," << r.dataset << "\n";
  write_text(path, out.str());
}

}  // namespace

void write_report_artifacts(const ValidationReport& report,
                            const std::string& out_dir) {
  fs::path base(out_dir);
  std::error_code ec;
  fs::create_directories(base / "plots", ec);
  if (ec)
    fail(ErrorCode::io_error, "cannot create output directory " + out_dir);

  write_text(base / "report.json", report_to_json(report));
  write_text(base / "report.md", report_to_markdown(report));
  write_text(base / "config.json", j_config(report.config).dump(2) + "\n");

  auto dump_visual = [&](const char* tag, const VisualSection& s) {
    write_scores_csv(base / "plots" / (std::string("scores_") + tag + ".csv"),
                     s.scores);
    write_silhouettes_csv(
        base / "plots" / (std::string("silhouettes_") + tag + ".csv"),
        s.silhouettes);
  };
  if (report.visual_method) dump_visual("method", *report.visual_method);
  if (report.visual_result) dump_visual("result", *report.visual_result);
}

}  // namespace cval
