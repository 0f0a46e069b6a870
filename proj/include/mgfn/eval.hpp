#pragma once

#include "mgfn/model.hpp"
#include "mgfn/types.hpp"

#include <cstdint>
#include <vector>

namespace mgfn {

struct LassoModel {
  Vector weights;  // in the original (unstandardized) feature space
  double intercept = 0.0;
  std::vector<double> objective_trace;  // one entry per coordinate sweep
};

// Coordinate descent on (1/2n)||y - Xw - b||^2 + alpha*||w||_1 with features
// standardized internally; constant columns get weight zero.
LassoModel lasso_fit(const Matrix& x, const Vector& y, double alpha);

Vector lasso_predict(const LassoModel& model, const Matrix& x);

struct RegressionMetrics {
  double mae = 0.0;
  double rmse = 0.0;
  double r2 = 0.0;
};

RegressionMetrics regression_metrics(const Vector& y, const Vector& predicted);

struct RegressionReport {
  double mae = 0.0;
  double rmse = 0.0;
  double r2 = 0.0;
  Index fold_count = 0;
};

// K-fold cross validation with deterministic folds (region index mod K);
// metrics are pooled over out-of-fold predictions.
RegressionReport regression_eval(const RegionEmbedding& emb, const Vector& targets, double alpha,
                                 Index folds);

struct KMeansResult {
  std::vector<Index> labels;
  double inertia = 0.0;
  std::vector<double> inertia_trace;  // best restart, one entry per Lloyd iteration
};

// Lloyd iterations from a kmeans++ seeding; `restarts` runs with sub-seeds
// drawn from the base seed, best inertia kept.
KMeansResult kmeans_best(const Matrix& points, Index k, std::uint64_t seed, int restarts = 10);

std::vector<Index> kmeans(const RegionEmbedding& emb, Index k, std::uint64_t seed);

// Mutual information normalized by the geometric mean of the entropies.
double nmi(const std::vector<Index>& a, const std::vector<Index>& b);

double ari(const std::vector<Index>& a, const std::vector<Index>& b);

struct ClusteringReport {
  double nmi = 0.0;
  double ari = 0.0;
  Index k = 0;
};

ClusteringReport clustering_eval(const RegionEmbedding& emb, const std::vector<Index>& truth,
                                 Index k, std::uint64_t seed);

}  // namespace mgfn
