#include "mgfn/mgd.hpp"

#include <cmath>
#include <limits>

namespace mgfn {

GraphMoments graph_moments(const MobilityGraph& g) {
  const auto& w = g.weights;
  if (w.size() == 0) throw ValidationError("graph_moments: empty weight matrix");
  GraphMoments m;
  m.mean = w.mean();
  m.variance = (w.array() - m.mean).square().mean();
  return m;
}

std::pair<double, double> moment_distances(const GraphMoments& a, const GraphMoments& b) {
  return {std::abs(a.mean - b.mean), std::abs(a.variance - b.variance)};
}

double unidirectional_flow_index(const MobilityGraph& g) {
  return (g.weights - g.weights.transpose()).cwiseAbs().sum();
}

std::vector<StructureLabelMatrix> structure_label_matrices(const MobilityMultiGraph& mg) {
  const Index T = mg.size();
  if (T < 1) throw ValidationError("structure_label_matrices: need at least one bin");
  const Index V = mg.n_regions();

  Matrix edge_mean = Matrix::Zero(V, V);
  for (const auto& g : mg.graphs) edge_mean += g.weights;
  edge_mean /= static_cast<double>(T);

  std::vector<StructureLabelMatrix> out(static_cast<std::size_t>(T));
  for (Index t = 0; t < T; ++t) {
    // Strict inequality: ties (e.g. an edge constant over time) label 0.
    out[static_cast<std::size_t>(t)].labels =
        (mg.graphs[static_cast<std::size_t>(t)].weights.array() > edge_mean.array())
            .cast<std::uint8_t>();
  }
  return out;
}

long structure_distance(const StructureLabelMatrix& a, const StructureLabelMatrix& b) {
  if (a.labels.rows() != b.labels.rows() || a.labels.cols() != b.labels.cols())
    throw ValidationError("structure_distance: label matrix dimensions differ");
  return (a.labels.array() != b.labels.array()).count();
}

namespace {

// Temporal gap in seconds between two bins; circular time-of-week when asked.
double temporal_gap(Index ta, Index tb, const MobilityMultiGraph& mg, bool circular) {
  const double raw = std::abs(static_cast<double>(ta - tb)) * static_cast<double>(mg.bin_width_s);
  if (!circular) return raw;
  const double period = static_cast<double>(mg.period_s);
  const double wrapped = std::fmod(raw, period);
  return std::min(wrapped, period - wrapped);
}

// Affine rescale of the off-diagonal values to [0,1]; a constant component
// maps to zero everywhere.
void minmax_offdiag(Matrix& m) {
  const Index T = m.rows();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (Index a = 0; a < T; ++a)
    for (Index b = a + 1; b < T; ++b) {
      lo = std::min(lo, m(a, b));
      hi = std::max(hi, m(a, b));
    }
  if (hi == lo) {
    m.setZero();
    return;
  }
  const double span = hi - lo;
  for (Index a = 0; a < T; ++a)
    for (Index b = 0; b < T; ++b) {
      if (a == b) continue;
      m(a, b) = (m(a, b) - lo) / span;
    }
}

}  // namespace

DistanceMatrix pairwise_mgd(const MobilityMultiGraph& mg, const MgdConfig& cfg) {
  cfg.validate();
  mg.validate();
  const Index T = mg.size();
  if (T < 2) throw ValidationError("pairwise_mgd: need at least two graphs");

  std::vector<GraphMoments> moments(static_cast<std::size_t>(T));
  std::vector<double> unif(static_cast<std::size_t>(T));
  for (Index t = 0; t < T; ++t) {
    moments[static_cast<std::size_t>(t)] = graph_moments(mg.graphs[static_cast<std::size_t>(t)]);
    unif[static_cast<std::size_t>(t)] =
        unidirectional_flow_index(mg.graphs[static_cast<std::size_t>(t)]);
  }
  const auto labels = structure_label_matrices(mg);

  ComponentMatrices comp{Matrix::Zero(T, T), Matrix::Zero(T, T), Matrix::Zero(T, T),
                         Matrix::Zero(T, T)};
  for (Index a = 0; a < T; ++a)
    for (Index b = a + 1; b < T; ++b) {
      const auto [dm, dv] = moment_distances(moments[static_cast<std::size_t>(a)],
                                             moments[static_cast<std::size_t>(b)]);
      const double du = std::abs(unif[static_cast<std::size_t>(a)] - unif[static_cast<std::size_t>(b)]);
      const double ds = static_cast<double>(structure_distance(
          labels[static_cast<std::size_t>(a)], labels[static_cast<std::size_t>(b)]));
      comp.mean(a, b) = comp.mean(b, a) = dm;
      comp.var(a, b) = comp.var(b, a) = dv;
      comp.unif(a, b) = comp.unif(b, a) = du;
      comp.ss(a, b) = comp.ss(b, a) = ds;
    }

  ComponentMatrices norm = comp;
  if (cfg.normalization == Normalization::MinMax) {
    minmax_offdiag(norm.mean);
    minmax_offdiag(norm.var);
    minmax_offdiag(norm.unif);
    minmax_offdiag(norm.ss);
  }

  // Largest attainable temporal gap, used to scale Z into [1, 1+lambda].
  double gap_max;
  if (cfg.use_circular) {
    gap_max = static_cast<double>(mg.period_s) / 2.0;
  } else {
    gap_max = static_cast<double>(T - 1) * static_cast<double>(mg.bin_width_s);
  }

  DistanceMatrix out;
  out.values = Matrix::Zero(T, T);
  for (Index a = 0; a < T; ++a)
    for (Index b = a + 1; b < T; ++b) {
      const double combined = cfg.component_weights(0) * norm.mean(a, b) +
                              cfg.component_weights(1) * norm.var(a, b) +
                              cfg.component_weights(2) * norm.unif(a, b) +
                              cfg.component_weights(3) * norm.ss(a, b);
      const double z = 1.0 + cfg.lambda * temporal_gap(a, b, mg, cfg.use_circular) / gap_max;
      out.values(a, b) = out.values(b, a) = z * combined;
    }
  out.components = std::move(comp);
  return out;
}

}  // namespace mgfn
