#pragma once

// Test-only reference for the pairwise graph distance: direct scalar loops,
// no shared code with the library path it checks.

#include "mgfn/mgd.hpp"
#include "mgfn/types.hpp"

#include <cmath>
#include <vector>

namespace naive {

inline double graph_mean(const mgfn::Matrix& w) {
  double sum = 0.0;
  for (mgfn::Index i = 0; i < w.rows(); ++i)
    for (mgfn::Index j = 0; j < w.cols(); ++j) sum += w(i, j);
  return sum / static_cast<double>(w.rows() * w.cols());
}

inline double graph_variance(const mgfn::Matrix& w) {
  const double mu = graph_mean(w);
  double sum = 0.0;
  for (mgfn::Index i = 0; i < w.rows(); ++i)
    for (mgfn::Index j = 0; j < w.cols(); ++j) sum += (w(i, j) - mu) * (w(i, j) - mu);
  return sum / static_cast<double>(w.rows() * w.cols());
}

inline double unif_index(const mgfn::Matrix& w) {
  double sum = 0.0;
  for (mgfn::Index i = 0; i < w.rows(); ++i)
    for (mgfn::Index j = 0; j < w.cols(); ++j) sum += std::abs(w(i, j) - w(j, i));
  return sum;
}

inline mgfn::Matrix pairwise_mgd(const mgfn::MobilityMultiGraph& mg, const mgfn::MgdConfig& cfg) {
  using mgfn::Index;
  const Index T = mg.size();
  const Index V = mg.n_regions();

  // Per-edge time means and binary labels.
  std::vector<mgfn::Matrix> labels(static_cast<std::size_t>(T));
  mgfn::Matrix edge_mean = mgfn::Matrix::Zero(V, V);
  for (Index t = 0; t < T; ++t)
    for (Index i = 0; i < V; ++i)
      for (Index j = 0; j < V; ++j)
        edge_mean(i, j) += mg.graphs[static_cast<std::size_t>(t)].weights(i, j);
  edge_mean /= static_cast<double>(T);
  for (Index t = 0; t < T; ++t) {
    labels[static_cast<std::size_t>(t)] = mgfn::Matrix::Zero(V, V);
    for (Index i = 0; i < V; ++i)
      for (Index j = 0; j < V; ++j)
        if (mg.graphs[static_cast<std::size_t>(t)].weights(i, j) > edge_mean(i, j))
          labels[static_cast<std::size_t>(t)](i, j) = 1.0;
  }

  // Raw components per unordered pair, stacked as (mean, var, unif, ss).
  std::vector<mgfn::Matrix> comp(4, mgfn::Matrix::Zero(T, T));
  for (Index a = 0; a < T; ++a)
    for (Index b = a + 1; b < T; ++b) {
      const auto& wa = mg.graphs[static_cast<std::size_t>(a)].weights;
      const auto& wb = mg.graphs[static_cast<std::size_t>(b)].weights;
      comp[0](a, b) = std::abs(graph_mean(wa) - graph_mean(wb));
      comp[1](a, b) = std::abs(graph_variance(wa) - graph_variance(wb));
      comp[2](a, b) = std::abs(unif_index(wa) - unif_index(wb));
      double xor_count = 0.0;
      for (Index i = 0; i < V; ++i)
        for (Index j = 0; j < V; ++j)
          if (labels[static_cast<std::size_t>(a)](i, j) != labels[static_cast<std::size_t>(b)](i, j))
            xor_count += 1.0;
      comp[3](a, b) = xor_count;
      for (int c = 0; c < 4; ++c) comp[static_cast<std::size_t>(c)](b, a) = comp[static_cast<std::size_t>(c)](a, b);
    }

  if (cfg.normalization == mgfn::Normalization::MinMax) {
    for (auto& m : comp) {
      double lo = comp[0](0, 1), hi = comp[0](0, 1);
      bool first = true;
      for (Index a = 0; a < T; ++a)
        for (Index b = a + 1; b < T; ++b) {
          if (first || m(a, b) < lo) lo = m(a, b);
          if (first || m(a, b) > hi) hi = m(a, b);
          first = false;
        }
      for (Index a = 0; a < T; ++a)
        for (Index b = 0; b < T; ++b) {
          if (a == b) continue;
          m(a, b) = (hi > lo) ? (m(a, b) - lo) / (hi - lo) : 0.0;
        }
    }
  }

  const double gap_max = cfg.use_circular
                             ? static_cast<double>(mg.period_s) / 2.0
                             : static_cast<double>(T - 1) * static_cast<double>(mg.bin_width_s);
  mgfn::Matrix out = mgfn::Matrix::Zero(T, T);
  for (Index a = 0; a < T; ++a)
    for (Index b = 0; b < T; ++b) {
      if (a == b) continue;
      double gap = std::abs(static_cast<double>(a - b)) * static_cast<double>(mg.bin_width_s);
      if (cfg.use_circular) {
        const double period = static_cast<double>(mg.period_s);
        gap = std::fmod(gap, period);
        gap = std::min(gap, period - gap);
      }
      const double z = 1.0 + cfg.lambda * gap / gap_max;
      double total = 0.0;
      for (int c = 0; c < 4; ++c)
        total += cfg.component_weights(c) * comp[static_cast<std::size_t>(c)](a, b);
      out(a, b) = z * total;
    }
  return out;
}

}  // namespace naive
