#include "mgfn/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace mgfn {

namespace {

struct Cluster {
  Index id = 0;  // smallest member index, stable across merges
  std::vector<Index> members;
};

double linkage_update(Linkage linkage, double d_ac, double d_bc, std::size_t na, std::size_t nb) {
  switch (linkage) {
    case Linkage::Average:
      return (static_cast<double>(na) * d_ac + static_cast<double>(nb) * d_bc) /
             static_cast<double>(na + nb);
    case Linkage::Complete:
      return std::max(d_ac, d_bc);
    case Linkage::Single:
      return std::min(d_ac, d_bc);
  }
  throw ValidationError("unknown linkage");
}

}  // namespace

ClusterAssignment agglomerative_cluster(const DistanceMatrix& d, Index n, Linkage linkage) {
  const Index T = d.values.rows();
  if (d.values.cols() != T) throw ValidationError("distance matrix must be square");
  if (n < 1 || n > T) throw ValidationError("cluster count must be in [1, T]");
  if (!d.values.isApprox(d.values.transpose()))
    throw ValidationError("distance matrix must be symmetric");
  if (d.values.diagonal().cwiseAbs().maxCoeff() != 0.0)
    throw ValidationError("distance matrix must have a zero diagonal");

  std::vector<Cluster> clusters(static_cast<std::size_t>(T));
  for (Index t = 0; t < T; ++t) {
    clusters[static_cast<std::size_t>(t)].id = t;
    clusters[static_cast<std::size_t>(t)].members = {t};
  }
  Matrix dist = d.values;  // Lance-Williams updates keep this exact per linkage

  while (static_cast<Index>(clusters.size()) > n) {
    std::size_t best_a = 0, best_b = 1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < clusters.size(); ++a)
      for (std::size_t b = a + 1; b < clusters.size(); ++b) {
        const double v = dist(static_cast<Index>(a), static_cast<Index>(b));
        const auto key = std::minmax(clusters[a].id, clusters[b].id);
        const auto best_key = std::minmax(clusters[best_a].id, clusters[best_b].id);
        if (v < best || (v == best && key < best_key)) {
          best = v;
          best_a = a;
          best_b = b;
        }
      }

    const std::size_t na = clusters[best_a].members.size();
    const std::size_t nb = clusters[best_b].members.size();
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      if (c == best_a || c == best_b) continue;
      const double merged = linkage_update(linkage, dist(static_cast<Index>(best_a), static_cast<Index>(c)),
                                           dist(static_cast<Index>(best_b), static_cast<Index>(c)), na, nb);
      dist(static_cast<Index>(best_a), static_cast<Index>(c)) = merged;
      dist(static_cast<Index>(c), static_cast<Index>(best_a)) = merged;
    }
    auto& keep = clusters[best_a];
    auto& gone = clusters[best_b];
    keep.id = std::min(keep.id, gone.id);
    keep.members.insert(keep.members.end(), gone.members.begin(), gone.members.end());

    // Drop row/column best_b by swapping with the last slot.
    const std::size_t last = clusters.size() - 1;
    if (best_b != last) {
      dist.row(static_cast<Index>(best_b)).swap(dist.row(static_cast<Index>(last)));
      dist.col(static_cast<Index>(best_b)).swap(dist.col(static_cast<Index>(last)));
      std::swap(clusters[best_b], clusters[last]);
    }
    clusters.pop_back();
    dist.conservativeResize(static_cast<Index>(clusters.size()),
                            static_cast<Index>(clusters.size()));
  }

  std::sort(clusters.begin(), clusters.end(),
            [](const Cluster& a, const Cluster& b) { return a.id < b.id; });

  ClusterAssignment out;
  out.n_clusters = n;
  out.labels.assign(static_cast<std::size_t>(T), 0);
  for (std::size_t k = 0; k < clusters.size(); ++k)
    for (Index t : clusters[k].members) out.labels[static_cast<std::size_t>(t)] = static_cast<Index>(k);
  return out;
}

ClusterAssignment contiguous_assignment(Index t_bins, Index n) {
  if (n < 1 || n > t_bins) throw ValidationError("group count must be in [1, T]");
  ClusterAssignment out;
  out.n_clusters = n;
  out.labels.reserve(static_cast<std::size_t>(t_bins));
  const Index base = t_bins / n;
  const Index extra = t_bins % n;
  for (Index k = 0; k < n; ++k) {
    const Index size = base + (k < extra ? 1 : 0);
    for (Index i = 0; i < size; ++i) out.labels.push_back(k);
  }
  return out;
}

std::vector<MobilityPattern> fuse_patterns(const MobilityMultiGraph& mg,
                                           const ClusterAssignment& asg, FuseOp op) {
  const Index T = mg.size();
  if (static_cast<Index>(asg.labels.size()) != T)
    throw ValidationError("assignment length must equal the number of bins");
  const Index V = mg.n_regions();

  std::vector<MobilityPattern> patterns(static_cast<std::size_t>(asg.n_clusters));
  for (Index k = 0; k < asg.n_clusters; ++k) {
    patterns[static_cast<std::size_t>(k)].pattern_id = k;
    patterns[static_cast<std::size_t>(k)].weights = Matrix::Zero(V, V);
  }
  for (Index t = 0; t < T; ++t) {
    const Index k = asg.labels[static_cast<std::size_t>(t)];
    if (k < 0 || k >= asg.n_clusters) throw ValidationError("cluster id out of range");
    patterns[static_cast<std::size_t>(k)].weights += mg.graphs[static_cast<std::size_t>(t)].weights;
    patterns[static_cast<std::size_t>(k)].members.push_back(t);
  }
  for (auto& p : patterns) {
    if (p.members.empty()) throw ValidationError("every cluster id must appear at least once");
    if (op == FuseOp::Mean) p.weights /= static_cast<double>(p.members.size());
  }
  return patterns;
}

}  // namespace mgfn
