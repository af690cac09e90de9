#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cval/engine.hpp"
#include "cval/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cval;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io_error, "cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io_error, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Dataset load_dataset(const std::string& path, bool dissimilarity) {
  if (dissimilarity) return Dataset{read_dissimilarity_csv(path)};
  return Dataset{read_feature_csv(path)};
}

void write_dataset(const Dataset& d, const fs::path& path) {
  if (is_feature(d))
    write_feature_csv(std::get<FeatureDataset>(d), path.string());
  else
    write_dissimilarity_csv(std::get<DissimilarityDataset>(d), path.string());
}

// Options shared by every subcommand that consumes randomness.
struct SeedOpts {
  std::optional<std::uint64_t> seed;
  bool from_entropy = false;
};

void add_seed_opts(CLI::App* cmd, SeedOpts& opts) {
  cmd->add_option("--seed", opts.seed, "Master seed for all randomness");
  cmd->add_flag("--seed-from-entropy", opts.from_entropy,
                "Draw the master seed from system entropy (recorded in the "
                "resolved config)");
}

std::uint64_t resolve_seed(const SeedOpts& opts) {
  if (opts.seed) return *opts.seed;
  if (!opts.from_entropy)
    throw CLI::ValidationError(
        "--seed", "either --seed or --seed-from-entropy is required");
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

// Inline method flags used by cluster/transfer/test-null.
struct MethodOpts {
  std::string algorithm = "kmeans";
  int k = 2;
  std::string preprocessing = "none";
  std::string linkage = "average";
  int max_iter = 100;
  int n_restarts = 10;
};

void add_method_opts(CLI::App* cmd, MethodOpts& opts) {
  cmd->add_option("--algorithm", opts.algorithm,
                  "Clustering algorithm (kmeans, hierarchical, pam)");
  cmd->add_option("--k", opts.k, "Number of clusters")->check(CLI::Range(1, 1 << 20));
  cmd->add_option("--preprocessing", opts.preprocessing,
                  "Preprocessing (none, standardize)");
  cmd->add_option("--linkage", opts.linkage,
                  "Linkage for hierarchical (single, complete, average)");
  cmd->add_option("--max-iter", opts.max_iter, "k-means iteration cap");
  cmd->add_option("--restarts", opts.n_restarts, "k-means restarts");
}

ClusteringMethod build_method(const MethodOpts& opts, std::uint64_t seed) {
  ClusteringMethod m;
  m.algorithm = algorithm_from_string(opts.algorithm);
  m.k = opts.k;
  m.preprocessing = preprocessing_from_string(opts.preprocessing);
  if (m.algorithm == Algorithm::hierarchical)
    m.linkage = linkage_from_string(opts.linkage);
  if (m.algorithm == Algorithm::kmeans) {
    m.seed = seed;
    m.max_iter = opts.max_iter;
    m.n_restarts = opts.n_restarts;
  }
  m.validate();
  return m;
}

void write_cross_block_csv(const Matrix& m,
                           const std::vector<std::string>& row_ids,
                           const std::vector<std::string>& col_ids,
                           const fs::path& path) {
  std::ostringstream out;
  out << "id";
  for (const auto& id : col_ids) out << "," << id;
  out << "\n";
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out << row_ids[i];
    for (std::size_t j = 0; j < m.cols(); ++j)
      out << "," << format_double(m(i, j));
    out << "\n";
  }
  write_text(path, out.str());
}

Matrix read_cross_block_csv(const fs::path& path,
                            const std::vector<std::string>& row_ids,
                            const std::vector<std::string>& col_ids) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open " + path.string());
  std::string line;
  std::getline(in, line);  // header
  Matrix m(row_ids.size(), col_ids.size());
  std::size_t r = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.back() == '\r') line.pop_back();
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    if (r >= row_ids.size() || cell != row_ids[r])
      fail(ErrorCode::schema_mismatch,
           "cross-block rows do not match the discovery objects");
    for (std::size_t c = 0; c < col_ids.size(); ++c) {
      if (!std::getline(ss, cell, ','))
        fail(ErrorCode::invalid_data, "short row in " + path.string());
      m(r, c) = std::stod(cell);
    }
    ++r;
  }
  if (r != row_ids.size())
    fail(ErrorCode::invalid_data, "row count mismatch in " + path.string());
  return m;
}

ClusteringMethod method_from_json_value(const json& j) {
  return method_from_json(j.dump());
}

json method_to_json_value(const ClusteringMethod& m) {
  return json::parse(method_to_json(m));
}

std::vector<ClusteringMethod> read_candidates(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::exception& e) {
    fail(ErrorCode::schema_mismatch,
         "bad candidates file " + path.string() + ": " + e.what());
  }
  if (!j.is_array() || j.empty())
    fail(ErrorCode::invalid_data,
         "candidates file must hold a non-empty array of methods");
  std::vector<ClusteringMethod> out;
  for (const auto& item : j) out.push_back(method_from_json_value(item));
  return out;
}

void echo_config(const fs::path& out_dir, const json& resolved) {
  write_text(out_dir / "config.json", resolved.dump(2) + "\n");
}

ProtocolConfig parse_protocol_config(const json& j) {
  ProtocolConfig c;
  c.data_file = j.value("data_file", "");
  c.discovery_file = j.value("discovery_file", "");
  c.validation_file = j.value("validation_file", "");
  c.dissimilarity_input = j.value("dissimilarity_input", false);
  c.mode = split_mode_from_string(j.value("mode", "inferential"));
  c.ratio = j.value("ratio", 0.5);
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (!j.contains("candidates"))
    fail(ErrorCode::invalid_data, "config needs a candidates array");
  for (const auto& item : j.at("candidates"))
    c.candidates.push_back(method_from_json_value(item));
  c.criterion = j.value("criterion", "asw");
  if (j.contains("aspects")) {
    c.aspects.clear();
    for (const auto& a : j.at("aspects")) c.aspects.insert(a.get<std::string>());
  }
  if (j.contains("variants")) {
    c.variants.clear();
    for (const auto& v : j.at("variants")) {
      std::string s = v.get<std::string>();
      if (s == "method_based") c.variants.push_back(Variant::method_based);
      else if (s == "result_based") c.variants.push_back(Variant::result_based);
      else fail(ErrorCode::invalid_data, "unknown variant: " + s);
    }
  }
  c.external_variable_file = j.value("external_variable_file", "");
  c.external_partition_file = j.value("external_partition_file", "");
  if (j.contains("null_model"))
    c.null_kind = null_kind_from_string(j.at("null_model").get<std::string>());
  c.null_replicates = j.value("null_replicates", 99);
  c.out_dir = j.value("out_dir", "");
  c.workers = j.value("workers", 1);
  if (j.contains("declared_threshold")) {
    c.declared_threshold = j.at("declared_threshold").get<double>();
    c.declared_threshold_index =
        j.value("declared_threshold_index", std::string("asw"));
  }
  return c;
}

// ---- subcommand bodies ----------------------------------------------

int cmd_split(const std::string& data_file, bool dissimilarity,
              const std::string& mode_str, double ratio, const SeedOpts& seeds,
              const std::string& out_dir) {
  std::uint64_t seed = resolve_seed(seeds);
  SplitMode mode = split_mode_from_string(mode_str);
  Dataset data = load_dataset(data_file, dissimilarity);
  SplitPair pair = mode == SplitMode::inferential
                       ? split_inferential(data, ratio, seed)
                       : split_descriptive(data, ratio, seed);
  fs::create_directories(out_dir);
  fs::path base(out_dir);
  write_dataset(pair.discovery, base / "discovery.csv");
  write_dataset(pair.validation, base / "validation.csv");
  if (pair.cross_block)
    write_cross_block_csv(*pair.cross_block,
                          dataset_object_ids(pair.discovery),
                          dataset_object_ids(pair.validation),
                          base / "cross_block.csv");

  json manifest;
  manifest["mode"] = to_string(mode);
  manifest["ratio"] = ratio;
  manifest["seed"] = seed;
  manifest["discovery_ids"] = dataset_object_ids(pair.discovery);
  manifest["validation_ids"] = dataset_object_ids(pair.validation);
  manifest["discovery_hash"] = hash_hex(dataset_hash(pair.discovery));
  manifest["validation_hash"] = hash_hex(dataset_hash(pair.validation));
  write_text(base / "split_manifest.json", manifest.dump(2) + "\n");

  json resolved = {{"command", "split"},          {"data", data_file},
                   {"dissimilarity", dissimilarity}, {"mode", to_string(mode)},
                   {"ratio", ratio},              {"seed", seed},
                   {"out", out_dir}};
  echo_config(base, resolved);
  return 0;
}

int cmd_ingest(const std::string& discovery_file,
               const std::string& validation_file, bool dissimilarity,
               const std::string& mode_str, const std::string& out_dir) {
  SplitMode mode = split_mode_from_string(mode_str);
  SplitPair pair = ingest_pair(load_dataset(discovery_file, dissimilarity),
                               load_dataset(validation_file, dissimilarity),
                               mode);
  fs::create_directories(out_dir);
  fs::path base(out_dir);
  json manifest;
  manifest["mode"] = to_string(mode);
  manifest["discovery_ids"] = dataset_object_ids(pair.discovery);
  manifest["validation_ids"] = dataset_object_ids(pair.validation);
  manifest["discovery_hash"] = hash_hex(dataset_hash(pair.discovery));
  manifest["validation_hash"] = hash_hex(dataset_hash(pair.validation));
  write_text(base / "ingest_manifest.json", manifest.dump(2) + "\n");
  json resolved = {{"command", "ingest"},
                   {"discovery", discovery_file},
                   {"validation", validation_file},
                   {"dissimilarity", dissimilarity},
                   {"mode", to_string(mode)},
                   {"out", out_dir}};
  echo_config(base, resolved);
  return 0;
}

int cmd_cluster(const std::string& data_file, bool dissimilarity,
                const MethodOpts& mopts, const SeedOpts& seeds,
                const std::string& out_dir) {
  std::uint64_t seed = mopts.algorithm == "kmeans" ? resolve_seed(seeds) : 0;
  ClusteringMethod method = build_method(mopts, seed);
  Dataset data = load_dataset(data_file, dissimilarity);
  ClusterModel model = apply_method(data, method);
  fs::create_directories(out_dir);
  fs::path base(out_dir);
  write_text(base / "model.json", model_to_json(model) + "\n");
  write_partition_csv(model.partition, (base / "partition.csv").string());
  json resolved = {{"command", "cluster"},
                   {"data", data_file},
                   {"dissimilarity", dissimilarity},
                   {"method", method_to_json_value(method)},
                   {"out", out_dir}};
  echo_config(base, resolved);
  return 0;
}

int cmd_transfer(const std::string& model_file,
                 const std::string& discovery_file,
                 const std::string& validation_file, bool dissimilarity,
                 const std::string& mode_str,
                 const std::string& cross_block_file,
                 const std::string& out_dir) {
  SplitMode mode = split_mode_from_string(mode_str);
  ClusterModel model = model_from_json(read_text(model_file));
  SplitPair pair = ingest_pair(load_dataset(discovery_file, dissimilarity),
                               load_dataset(validation_file, dissimilarity),
                               mode);
  if (!cross_block_file.empty())
    pair.cross_block = read_cross_block_csv(
        cross_block_file, dataset_object_ids(pair.discovery),
        dataset_object_ids(pair.validation));
  Partition c2tf = transfer(model, pair, default_rule(model.method, mode));
  fs::create_directories(out_dir);
  fs::path base(out_dir);
  write_partition_csv(c2tf, (base / "transferred.csv").string());
  json resolved = {{"command", "transfer"},
                   {"model", model_file},
                   {"discovery", discovery_file},
                   {"validation", validation_file},
                   {"dissimilarity", dissimilarity},
                   {"mode", to_string(mode)},
                   {"out", out_dir}};
  if (!cross_block_file.empty()) resolved["cross_block"] = cross_block_file;
  echo_config(base, resolved);
  return 0;
}

int cmd_select(const std::string& data_file, bool dissimilarity,
               const std::string& candidates_file, const std::string& criterion,
               const std::string& out_dir) {
  Dataset d1 = load_dataset(data_file, dissimilarity);
  std::vector<ClusteringMethod> candidates =
      read_candidates(candidates_file);
  SelectionResult sel = select_method(d1, candidates, criterion);
  fs::create_directories(out_dir);
  fs::path base(out_dir);
  json j;
  j["criterion"] = sel.criterion;
  j["best"] = method_to_json_value(sel.best);
  json rows = json::array();
  for (const auto& r : sel.ranking) {
    json row;
    row["method"] = method_to_json_value(r.method);
    if (r.failed) {
      row["failed"] = true;
      row["error"] = r.error;
    } else {
      row["criterion"] = r.criterion;
    }
    rows.push_back(std::move(row));
  }
  j["ranking"] = std::move(rows);
  write_text(base / "selection.json", j.dump(2) + "\n");
  json resolved = {{"command", "select"},
                   {"data", data_file},
                   {"dissimilarity", dissimilarity},
                   {"candidates", candidates_file},
                   {"criterion", criterion},
                   {"out", out_dir}};
  echo_config(base, resolved);
  return 0;
}

int cmd_test_null(const std::string& data_file, const MethodOpts& mopts,
                  const std::string& statistic, const std::string& null_model,
                  int replicates, const SeedOpts& seeds,
                  const std::string& out_dir) {
  std::uint64_t seed = resolve_seed(seeds);
  ClusteringMethod method = build_method(
      mopts, Rng::substream(seed, 1).next_u64());
  FeatureDataset data = read_feature_csv(data_file);
  MonteCarloResult r =
      monte_carlo_test(data, method, cluster_statistic(statistic),
                       null_kind_from_string(null_model), replicates, seed);
  fs::create_directories(out_dir);
  fs::path base(out_dir);
  write_text(base / "null_test.json", mc_result_to_json(r) + "\n");
  json resolved = {{"command", "test-null"},
                   {"data", data_file},
                   {"method", method_to_json_value(method)},
                   {"statistic", statistic},
                   {"null_model", null_model},
                   {"replicates", replicates},
                   {"seed", seed},
                   {"out", out_dir}};
  echo_config(base, resolved);
  std::cout << "p_value " << format_double(r.p_value) << "\n";
  return 0;
}

int cmd_validate(const std::string& config_file, const SeedOpts& seeds,
                 const std::string& out_override, int workers_override) {
  json j;
  try {
    j = json::parse(read_text(config_file));
  } catch (const json::exception& e) {
    fail(ErrorCode::schema_mismatch,
         "bad config file " + config_file + ": " + e.what());
  }
  ProtocolConfig config = parse_protocol_config(j);
  if (seeds.seed || seeds.from_entropy) config.seed = resolve_seed(seeds);
  else if (!j.contains("seed"))
    throw CLI::ValidationError(
        "--seed", "config has no seed; pass --seed or --seed-from-entropy");
  if (!out_override.empty()) config.out_dir = out_override;
  if (workers_override > 0) config.workers = workers_override;
  ValidationReport report = run_protocol(config);
  if (config.out_dir.empty()) std::cout << report_to_json(report) << "\n";
  return 0;
}

int cmd_report(const std::string& run_dir, const std::string& format) {
  fs::path base(run_dir);
  fs::path file = base / (format == "markdown" ? "report.md" : "report.json");
  std::cout << read_text(file);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-step cluster validation toolkit"};
  app.require_subcommand(1);

  // split
  auto* split = app.add_subcommand("split", "Split a dataset into discovery and validation parts");
  std::string sp_data, sp_mode = "inferential", sp_out = ".";
  bool sp_diss = false;
  double sp_ratio = 0.5;
  SeedOpts sp_seeds;
  split->add_option("--data", sp_data, "Input CSV")->required();
  split->add_flag("--dissimilarity", sp_diss, "Input is a dissimilarity matrix");
  split->add_option("--mode", sp_mode, "inferential (objects) or descriptive (variables)");
  split->add_option("--ratio", sp_ratio, "Discovery share")
      ->check(CLI::Range(std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0)));
  split->add_option("--out", sp_out, "Output directory");
  add_seed_opts(split, sp_seeds);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Pair pre-collected discovery and validation files");
  std::string in_d, in_v, in_mode = "inferential", in_out = ".";
  bool in_diss = false;
  ingest->add_option("--discovery", in_d, "Discovery CSV")->required();
  ingest->add_option("--validation", in_v, "Validation CSV")->required();
  ingest->add_flag("--dissimilarity", in_diss, "Inputs are dissimilarity matrices");
  ingest->add_option("--mode", in_mode, "inferential or descriptive");
  ingest->add_option("--out", in_out, "Output directory");

  // cluster
  auto* cluster = app.add_subcommand("cluster", "Fit a clustering method to a dataset");
  std::string cl_data, cl_out = ".";
  bool cl_diss = false;
  MethodOpts cl_method;
  SeedOpts cl_seeds;
  cluster->add_option("--data", cl_data, "Input CSV")->required();
  cluster->add_flag("--dissimilarity", cl_diss, "Input is a dissimilarity matrix");
  add_method_opts(cluster, cl_method);
  cluster->add_option("--out", cl_out, "Output directory");
  add_seed_opts(cluster, cl_seeds);

  // transfer
  auto* transfer_cmd = app.add_subcommand("transfer", "Carry a fitted clustering onto validation data");
  std::string tr_model, tr_d, tr_v, tr_mode = "inferential", tr_cross, tr_out = ".";
  bool tr_diss = false;
  transfer_cmd->add_option("--model", tr_model, "model.json from cluster")->required();
  transfer_cmd->add_option("--discovery", tr_d, "Discovery CSV")->required();
  transfer_cmd->add_option("--validation", tr_v, "Validation CSV")->required();
  transfer_cmd->add_flag("--dissimilarity", tr_diss, "Inputs are dissimilarity matrices");
  transfer_cmd->add_option("--mode", tr_mode, "inferential or descriptive");
  transfer_cmd->add_option("--cross-block", tr_cross, "Between-part dissimilarities CSV");
  transfer_cmd->add_option("--out", tr_out, "Output directory");

  // select
  auto* select = app.add_subcommand("select", "Pick the best method on discovery data");
  std::string se_data, se_candidates, se_criterion = "asw", se_out = ".";
  bool se_diss = false;
  select->add_option("--data", se_data, "Discovery CSV")->required();
  select->add_flag("--dissimilarity", se_diss, "Input is a dissimilarity matrix");
  select->add_option("--candidates", se_candidates, "JSON array of candidate methods")->required();
  select->add_option("--criterion", se_criterion, "Selection index (asw, ch, homogeneity, separation)");
  select->add_option("--out", se_out, "Output directory");

  // validate
  auto* validate = app.add_subcommand("validate", "Run the full two-step protocol from a config file");
  std::string va_config, va_out;
  int va_workers = 0;
  SeedOpts va_seeds;
  validate->add_option("--config", va_config, "Protocol config JSON")->required();
  validate->add_option("--out", va_out, "Override the output directory");
  validate->add_option("--workers", va_workers, "Worker count");
  add_seed_opts(validate, va_seeds);

  // test-null
  auto* testnull = app.add_subcommand("test-null", "Monte-Carlo test against a homogeneity null model");
  std::string tn_data, tn_stat = "asw", tn_null = "uniform", tn_out = ".";
  int tn_reps = 99;
  MethodOpts tn_method;
  SeedOpts tn_seeds;
  testnull->add_option("--data", tn_data, "Feature CSV")->required();
  add_method_opts(testnull, tn_method);
  testnull->add_option("--statistic", tn_stat, "Test statistic (asw, ch, homogeneity, separation)");
  testnull->add_option("--null", tn_null, "Null model (uniform, gaussian)");
  testnull->add_option("--replicates", tn_reps, "Null replicates M")->check(CLI::Range(1, 1000000));
  testnull->add_option("--out", tn_out, "Output directory");
  add_seed_opts(testnull, tn_seeds);

  // report
  auto* report = app.add_subcommand("report", "Print a finished run's report");
  std::string re_run, re_format = "json";
  report->add_option("--run", re_run, "Run directory written by validate")->required();
  report->add_option("--format", re_format, "json or markdown")
      ->check(CLI::IsMember({"json", "markdown"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*split)
      return cmd_split(sp_data, sp_diss, sp_mode, sp_ratio, sp_seeds, sp_out);
    if (*ingest) return cmd_ingest(in_d, in_v, in_diss, in_mode, in_out);
    if (*cluster)
      return cmd_cluster(cl_data, cl_diss, cl_method, cl_seeds, cl_out);
    if (*transfer_cmd)
      return cmd_transfer(tr_model, tr_d, tr_v, tr_diss, tr_mode, tr_cross,
                          tr_out);
    if (*select)
      return cmd_select(se_data, se_diss, se_candidates, se_criterion, se_out);
    if (*validate) return cmd_validate(va_config, va_seeds, va_out, va_workers);
    if (*testnull)
      return cmd_test_null(tn_data, tn_method, tn_stat, tn_null, tn_reps,
                           tn_seeds, tn_out);
    if (*report) return cmd_report(re_run, re_format);
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    json err = {{"error", error_code_name(e.code())}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    json err = {{"error", "internal"}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 2;
}
