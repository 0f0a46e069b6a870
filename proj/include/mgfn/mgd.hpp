#pragma once

#include "mgfn/types.hpp"

#include <optional>
#include <vector>

namespace mgfn {

// First two moments of the edge-weight distribution of one graph. The edge
// set is all |V|^2 ordered pairs, diagonal included, so |E| is constant
// across graphs and the variance uses the population divisor.
struct GraphMoments {
  double mean = 0.0;
  double variance = 0.0;
};

// Binary matrix flagging edges whose weight exceeds that edge's time-mean.
struct StructureLabelMatrix {
  Mat<std::uint8_t> labels;
};

struct DistanceComponents {
  double d_mean = 0.0;
  double d_var = 0.0;
  double d_unif = 0.0;
  long d_ss = 0;
};

enum class Normalization { MinMax, Identity };

struct MgdConfig {
  // Weights for (mean, var, unif, ss) in that order.
  Eigen::Vector4d component_weights = Eigen::Vector4d::Ones();
  Normalization normalization = Normalization::MinMax;
  double lambda = 1.0;       // temporal penalty strength in Z
  bool use_circular = true;  // time-of-week distance modulo the period

  void validate() const {
    if ((component_weights.array() < 0.0).any())
      throw ValidationError("mgd component weights must be non-negative");
    if (lambda < 0.0) throw ValidationError("mgd lambda must be non-negative");
  }
};

struct ComponentMatrices {
  Matrix mean;
  Matrix var;
  Matrix unif;
  Matrix ss;  // integer counts stored as doubles
};

struct DistanceMatrix {
  Matrix values;  // T x T, symmetric, zero diagonal
  std::optional<ComponentMatrices> components;

  DistanceComponents pair(Index a, Index b) const {
    if (!components) throw ValidationError("distance components were not kept");
    return DistanceComponents{components->mean(a, b), components->var(a, b),
                              components->unif(a, b),
                              static_cast<long>(components->ss(a, b))};
  }
};

GraphMoments graph_moments(const MobilityGraph& g);

// (|mu_a - mu_b|, |var_a - var_b|)
std::pair<double, double> moment_distances(const GraphMoments& a, const GraphMoments& b);

// Sum of |w_ij - w_ji| over all ordered pairs; measures directional imbalance.
double unidirectional_flow_index(const MobilityGraph& g);

// One label matrix per bin: entry is 1 iff that bin's weight strictly exceeds
// the edge's mean weight over all bins.
std::vector<StructureLabelMatrix> structure_label_matrices(const MobilityMultiGraph& mg);

// Number of positions where the two label matrices differ.
long structure_distance(const StructureLabelMatrix& a, const StructureLabelMatrix& b);

// Full pairwise distance matrix: per-pair components, optional min-max
// normalization over all unordered pairs, weighted sum, temporal factor
// Z(dt) = 1 + lambda * dt / dt_max.
DistanceMatrix pairwise_mgd(const MobilityMultiGraph& mg, const MgdConfig& cfg);

}  // namespace mgfn
