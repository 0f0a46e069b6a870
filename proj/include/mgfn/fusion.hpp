#pragma once

#include "mgfn/mgd.hpp"
#include "mgfn/types.hpp"

#include <vector>

namespace mgfn {

enum class Linkage { Average, Complete, Single };
enum class FuseOp { Mean, Sum };

struct ClusterAssignment {
  std::vector<Index> labels;  // cluster id per time bin, ids are 0..n_clusters-1
  Index n_clusters = 0;
};

// A fused adjacency matrix summarizing one cluster of similar bins.
struct MobilityPattern {
  Index pattern_id = 0;
  Matrix weights;
  std::vector<Index> members;  // time indices that were fused
};

// Bottom-up merging of the closest cluster pair until n remain. Ties break on
// the lexicographically smallest (min cluster id, max cluster id) pair, where
// a cluster's id is its smallest member index; final ids are assigned in
// order of smallest member.
ClusterAssignment agglomerative_cluster(const DistanceMatrix& d, Index n,
                                        Linkage linkage = Linkage::Average);

// Splits 0..T-1 into n contiguous chunks of near-equal size (earlier chunks
// take the remainder). Stands in for distance-based clustering when the
// fusion stage is ablated.
ClusterAssignment contiguous_assignment(Index t_bins, Index n);

// Element-wise mean (or sum) of each cluster's member graphs.
std::vector<MobilityPattern> fuse_patterns(const MobilityMultiGraph& mg,
                                           const ClusterAssignment& asg,
                                           FuseOp op = FuseOp::Mean);

}  // namespace mgfn
