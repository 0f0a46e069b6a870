#include "mgfn/config.hpp"
#include "mgfn/io.hpp"
#include "mgfn/log.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace mgfn;

namespace {

struct CliOptions {
  std::string config_path;
  std::string out_dir = "mgfn_out";
  std::optional<std::int64_t> seed;
  std::string regression_targets;
  std::string clustering_targets;
};

PipelineConfig load_config(const CliOptions& opts) {
  PipelineConfig cfg = opts.config_path.empty() ? PipelineConfig::defaults()
                                                : PipelineConfig::load(opts.config_path);
  if (opts.seed) cfg.override_seed(static_cast<std::uint64_t>(*opts.seed));
  return cfg;
}

void cmd_synth(const CliOptions& opts) {
  const PipelineConfig cfg = load_config(opts);
  const SynthCity city = generate_city(cfg.synth);
  fs::create_directories(opts.out_dir);
  io::save_multigraph(fs::path(opts.out_dir) / "multigraph", city.multigraph);
  io::save_ground_truth(fs::path(opts.out_dir) / "ground_truth.json", city.truth);
  io::save_regions(fs::path(opts.out_dir) / "regions.csv", city.multigraph.regions);
  io::save_regression_targets(fs::path(opts.out_dir) / "targets_activity.csv",
                              city.truth.activity_intensity);
  std::vector<Index> function_labels;
  for (const RegionFunction f : city.truth.region_function)
    function_labels.push_back(f == RegionFunction::Residential ? 0 : 1);
  io::save_clustering_targets(fs::path(opts.out_dir) / "targets_function.csv", function_labels);
  log_info("synth: wrote " + std::to_string(city.multigraph.size()) + " bins for " +
           std::to_string(city.multigraph.n_regions()) + " regions");
}

void cmd_ingest(const CliOptions& opts) {
  const PipelineConfig cfg = load_config(opts);
  if (cfg.data.trips_path.empty() || cfg.data.regions_path.empty())
    throw ConfigError("[data] trips and regions paths are required for ingest");
  if (!cfg.data.window) throw ConfigError("[data] window_start/window_end are required for ingest");
  const RegionSet regions = io::load_regions(cfg.data.regions_path);
  std::ifstream trips_file(cfg.data.trips_path);
  if (!trips_file) throw IoError("missing artifact: " + cfg.data.trips_path);
  const auto trips = parse_trips(trips_file, regions);
  const BinnedTrips binned =
      build_multigraph(trips, regions, cfg.data.bin_width_s, *cfg.data.window, cfg.data.period_s);
  fs::create_directories(opts.out_dir);
  io::save_multigraph(fs::path(opts.out_dir) / "multigraph", binned.multigraph, cfg.data.window);
  io::save_regions(fs::path(opts.out_dir) / "regions.csv", regions);
  log_info("ingest: " + std::to_string(trips.size()) + " trips, " +
           std::to_string(binned.dropped) + " outside the window");
}

void cmd_distances(const CliOptions& opts) {
  const PipelineConfig cfg = load_config(opts);
  const MobilityMultiGraph mg = io::load_multigraph(fs::path(opts.out_dir) / "multigraph");
  const DistanceMatrix d = pairwise_mgd(mg, cfg.mgd);
  io::save_distances(fs::path(opts.out_dir) / "distances.csv",
                     fs::path(opts.out_dir) / "distance_components.csv", d);
  log_info("distances: " + std::to_string(mg.size()) + "x" + std::to_string(mg.size()));
}

void cmd_fuse(const CliOptions& opts) {
  const PipelineConfig cfg = load_config(opts);
  const MobilityMultiGraph mg = io::load_multigraph(fs::path(opts.out_dir) / "multigraph");
  ClusterAssignment asg;
  if (cfg.train.ablation.no_mgf) {
    asg = contiguous_assignment(mg.size(), cfg.fusion.n_patterns);
    log_info("fuse: contiguous time grouping (no_mgf)");
  } else {
    DistanceMatrix d;
    d.values = io::load_matrix_csv(fs::path(opts.out_dir) / "distances.csv");
    asg = agglomerative_cluster(d, cfg.fusion.n_patterns, cfg.fusion.linkage);
  }
  const auto patterns = fuse_patterns(mg, asg, cfg.fusion.fuse_op);
  io::save_assignment(fs::path(opts.out_dir) / "assignment.csv", asg, mg);
  io::save_patterns(fs::path(opts.out_dir) / "patterns", patterns, mg.n_regions());
  log_info("fuse: " + std::to_string(patterns.size()) + " patterns");
}

ModelDims dims_from(const PipelineConfig& cfg, Index n_regions, Index n_patterns) {
  ModelDims dims;
  dims.n_regions = n_regions;
  dims.n_patterns = n_patterns;
  dims.hidden = cfg.model.hidden;
  dims.heads = cfg.model.heads;
  dims.layers = cfg.model.layers;
  dims.validate();
  return dims;
}

void cmd_train(const CliOptions& opts) {
  const PipelineConfig cfg = load_config(opts);
  const MobilityMultiGraph mg = io::load_multigraph(fs::path(opts.out_dir) / "multigraph");
  const auto patterns = io::load_patterns(fs::path(opts.out_dir) / "patterns");
  const FlowMatrix flow = aggregate_flow(mg);
  const ModelDims dims = dims_from(cfg, mg.n_regions(), static_cast<Index>(patterns.size()));

  TrainConfig train_cfg = cfg.train;
  train_cfg.seed = cfg.model.seed;
  const TrainResult result = train(patterns, flow, dims, train_cfg);

  io::save_checkpoint(fs::path(opts.out_dir) / "checkpoint.json",
                      io::Checkpoint{result.params, dims, train_cfg.seed, train_cfg.ablation});
  io::save_history(fs::path(opts.out_dir) / "history.csv", result.history);
  io::save_embeddings(fs::path(opts.out_dir) / "embeddings.csv", result.embeddings);
  log_info("train: " + std::to_string(result.history.size()) + " epochs, final loss " +
           io::format_double(result.history.back().loss));
}

void cmd_embed(const CliOptions& opts) {
  const auto ckpt = io::load_checkpoint(fs::path(opts.out_dir) / "checkpoint.json");
  const auto patterns = io::load_patterns(fs::path(opts.out_dir) / "patterns");
  const ForwardCache cache =
      forward(patterns, ckpt.params, ckpt.dims, forward_options(ckpt.ablation));
  io::save_embeddings(fs::path(opts.out_dir) / "embeddings.csv", RegionEmbedding{cache.embeddings});
  log_info("embed: wrote " + std::to_string(cache.embeddings.rows()) + " region embeddings");
}

void cmd_eval(const CliOptions& opts) {
  const PipelineConfig cfg = load_config(opts);
  const RegionEmbedding emb = io::load_embeddings(fs::path(opts.out_dir) / "embeddings.csv");
  const Index v = emb.values.rows();

  // Explicit target paths win; otherwise fall back to the synth outputs.
  fs::path regression_path = opts.regression_targets;
  fs::path clustering_path = opts.clustering_targets;
  if (regression_path.empty() && fs::exists(fs::path(opts.out_dir) / "targets_activity.csv"))
    regression_path = fs::path(opts.out_dir) / "targets_activity.csv";
  if (clustering_path.empty() && fs::exists(fs::path(opts.out_dir) / "targets_function.csv"))
    clustering_path = fs::path(opts.out_dir) / "targets_function.csv";
  if (regression_path.empty() && clustering_path.empty())
    throw ConfigError("eval needs --regression-targets and/or --clustering-targets");

  std::optional<RegressionReport> regression;
  std::optional<ClusteringReport> clustering;
  if (!regression_path.empty()) {
    const Vector targets = io::load_regression_targets(regression_path, v);
    regression = regression_eval(emb, targets, cfg.eval.alpha, cfg.eval.folds);
  }
  if (!clustering_path.empty()) {
    const auto truth = io::load_clustering_targets(clustering_path, v);
    clustering = clustering_eval(emb, truth, cfg.eval.k, cfg.model.seed);
  }
  io::save_report_json(fs::path(opts.out_dir) / "report.json", regression, clustering);
  io::save_report_row(fs::path(opts.out_dir) / "report_row.csv", regression, clustering);
  log_info("eval: wrote report.json");
}

void cmd_report(const CliOptions& opts) {
  const fs::path out(opts.out_dir);
  const fs::path report = out / "report";
  fs::create_directories(report);

  // Pattern timeline (assignment per bin, ready for plotting).
  {
    const MobilityMultiGraph mg = io::load_multigraph(out / "multigraph");
    const ClusterAssignment asg = io::load_assignment(out / "assignment.csv");
    io::save_assignment(report / "pattern_timeline.csv", asg, mg);
  }
  // Loss curve without the timing column so reruns are byte-identical.
  {
    std::ifstream in(out / "history.csv");
    if (!in) throw IoError("missing artifact: " + (out / "history.csv").string());
    std::ofstream curve(report / "loss_curve.csv");
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
      const auto second_comma = line.find(',', line.find(',') + 1);
      curve << (first ? "epoch,loss" : line.substr(0, second_comma)) << '\n';
      first = false;
    }
  }
  // Distance heatmap data.
  io::save_matrix_csv(report / "distance_heatmap.csv",
                      io::load_matrix_csv(out / "distances.csv"));
  // Metric table.
  {
    std::ifstream in(out / "report_row.csv");
    if (!in) throw IoError("missing artifact: " + (out / "report_row.csv").string());
    std::ofstream table(report / "metrics.csv");
    table << in.rdbuf();
  }
  log_info("report: wrote " + report.string());
}

int dispatch(const std::string& name, const CliOptions& opts) {
  if (name == "synth") cmd_synth(opts);
  else if (name == "ingest") cmd_ingest(opts);
  else if (name == "distances") cmd_distances(opts);
  else if (name == "fuse") cmd_fuse(opts);
  else if (name == "train") cmd_train(opts);
  else if (name == "embed") cmd_embed(opts);
  else if (name == "eval") cmd_eval(opts);
  else if (name == "report") cmd_report(opts);
  else return 1;
  return 0;
}

int error_exit(const char* kind, const std::string& message, int code) {
  nlohmann::json j;
  j["error"] = {{"kind", kind}, {"message", message}};
  std::cerr << j.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mobility multi-graph fusion and region embedding pipeline"};
  app.require_subcommand(1);

  CliOptions opts;
  std::string stage;
  for (const char* name : {"synth", "ingest", "distances", "fuse", "train", "embed", "eval", "report"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", opts.config_path, "pipeline config file (INI)");
    sub->add_option("--out", opts.out_dir, "workspace directory for stage artifacts");
    sub->add_option("--seed", opts.seed, "override every seeded stage");
    if (std::string(name) == "eval") {
      sub->add_option("--regression-targets", opts.regression_targets,
                      "CSV region_id,value");
      sub->add_option("--clustering-targets", opts.clustering_targets,
                      "CSV region_id,label");
    }
    sub->callback([&stage, name] { stage = name; });
  }

  CLI11_PARSE(app, argc, argv);

  try {
    return dispatch(stage, opts);
  } catch (const IoError& e) {
    return error_exit("missing_artifact", e.what(), 2);
  } catch (const NumericError& e) {
    return error_exit("numeric", e.what(), 4);
  } catch (const Error& e) {
    return error_exit("validation", e.what(), 3);
  } catch (const std::exception& e) {
    return error_exit("internal", e.what(), 1);
  }
}
