#pragma once

#include "mgfn/eval.hpp"
#include "mgfn/fusion.hpp"
#include "mgfn/ingest.hpp"
#include "mgfn/mgd.hpp"
#include "mgfn/model.hpp"
#include "mgfn/synth.hpp"
#include "mgfn/training.hpp"
#include "mgfn/types.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mgfn::io {

namespace fs = std::filesystem;

// Doubles are written with enough digits to round-trip exactly, so reruns
// with identical inputs produce identical bytes.
std::string format_double(double v);

void save_regions(const fs::path& file, const RegionSet& regions);
RegionSet load_regions(const fs::path& file);

// Directory layout: manifest.json plus one sparse edge-list CSV per bin.
void save_multigraph(const fs::path& dir, const MobilityMultiGraph& mg,
                     std::optional<TimeWindow> window = std::nullopt);
MobilityMultiGraph load_multigraph(const fs::path& dir);

void save_matrix_csv(const fs::path& file, const Matrix& m);
Matrix load_matrix_csv(const fs::path& file);

// distances.csv holds the TxT values; the long form lists per-pair raw
// components for plotting.
void save_distances(const fs::path& values_file, const fs::path& components_file,
                    const DistanceMatrix& d);

void save_assignment(const fs::path& file, const ClusterAssignment& asg,
                     const MobilityMultiGraph& mg);
ClusterAssignment load_assignment(const fs::path& file);

void save_patterns(const fs::path& dir, const std::vector<MobilityPattern>& patterns,
                   Index n_regions);
std::vector<MobilityPattern> load_patterns(const fs::path& dir);

struct Checkpoint {
  ModelParams params;
  ModelDims dims;
  std::uint64_t seed = 0;
  Ablation ablation;
};

void save_checkpoint(const fs::path& file, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const fs::path& file);

void save_embeddings(const fs::path& file, const RegionEmbedding& emb);
RegionEmbedding load_embeddings(const fs::path& file);

void save_history(const fs::path& file, const TrainHistory& history);

void save_ground_truth(const fs::path& file, const GroundTruth& truth);
GroundTruth load_ground_truth(const fs::path& file);

// Targets: `region_id,value` for regression, `region_id,label` for clustering.
void save_regression_targets(const fs::path& file, const Vector& values);
Vector load_regression_targets(const fs::path& file, Index n_regions);
void save_clustering_targets(const fs::path& file, const std::vector<Index>& labels);
std::vector<Index> load_clustering_targets(const fs::path& file, Index n_regions);

void save_report_json(const fs::path& file, const std::optional<RegressionReport>& regression,
                      const std::optional<ClusteringReport>& clustering);
void save_report_row(const fs::path& file, const std::optional<RegressionReport>& regression,
                     const std::optional<ClusteringReport>& clustering);

}  // namespace mgfn::io
