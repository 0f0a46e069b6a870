#include "mgfn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

namespace mgfn {

namespace {

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

}  // namespace

LassoModel lasso_fit(const Matrix& x, const Vector& y, double alpha) {
  const Index n = x.rows();
  const Index d = x.cols();
  if (n < 2) throw ValidationError("lasso needs at least 2 samples");
  if (y.size() != n) throw ValidationError("target length must match sample count");
  if (alpha <= 0.0) throw ValidationError("lasso alpha must be positive");
  if (!x.allFinite() || !y.allFinite()) throw NumericError("lasso inputs must be finite");

  Vector mean = x.colwise().mean();
  Vector sd(d);
  Matrix xs(n, d);
  for (Index j = 0; j < d; ++j) {
    const Vector centered = x.col(j).array() - mean(j);
    sd(j) = std::sqrt(centered.squaredNorm() / static_cast<double>(n));
    xs.col(j) = (sd(j) > 0.0) ? (centered / sd(j)).eval() : Vector::Zero(n);
  }
  const double y_mean = y.mean();
  Vector residual = y.array() - y_mean;

  Vector w = Vector::Zero(d);
  LassoModel model;
  constexpr int kMaxSweeps = 10000;
  constexpr double kTol = 1e-6;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double max_step = 0.0;
    for (Index j = 0; j < d; ++j) {
      if (sd(j) == 0.0) continue;
      // Unit-variance columns make the coordinate curvature exactly 1.
      const double rho = xs.col(j).dot(residual) / static_cast<double>(n) + w(j);
      const double next = soft_threshold(rho, alpha);
      const double step = next - w(j);
      if (step != 0.0) {
        residual -= xs.col(j) * step;
        w(j) = next;
      }
      max_step = std::max(max_step, std::abs(step));
    }
    model.objective_trace.push_back(residual.squaredNorm() / (2.0 * static_cast<double>(n)) +
                                    alpha * w.lpNorm<1>());
    if (max_step < kTol) break;
  }

  model.weights = Vector::Zero(d);
  for (Index j = 0; j < d; ++j)
    if (sd(j) > 0.0) model.weights(j) = w(j) / sd(j);
  model.intercept = y_mean - model.weights.dot(mean);
  return model;
}

Vector lasso_predict(const LassoModel& model, const Matrix& x) {
  return (x * model.weights).array() + model.intercept;
}

RegressionMetrics regression_metrics(const Vector& y, const Vector& predicted) {
  if (y.size() != predicted.size()) throw ValidationError("prediction length mismatch");
  const Vector err = y - predicted;
  RegressionMetrics m;
  m.mae = err.cwiseAbs().mean();
  m.rmse = std::sqrt(err.squaredNorm() / static_cast<double>(err.size()));
  const double sst = (y.array() - y.mean()).square().sum();
  const double sse = err.squaredNorm();
  m.r2 = (sst > 0.0) ? 1.0 - sse / sst : (sse == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity());
  return m;
}

RegressionReport regression_eval(const RegionEmbedding& emb, const Vector& targets, double alpha,
                                 Index folds) {
  const Matrix& x = emb.values;
  const Index n = x.rows();
  if (targets.size() != n) throw ValidationError("one target per region required");
  if (folds < 2) throw ValidationError("need at least 2 folds");
  if (folds > n) throw ValidationError("more folds than regions");

  Vector pooled(n);
  for (Index fold = 0; fold < folds; ++fold) {
    std::vector<Index> train_idx, test_idx;
    for (Index i = 0; i < n; ++i) (i % folds == fold ? test_idx : train_idx).push_back(i);

    Matrix x_train(static_cast<Index>(train_idx.size()), x.cols());
    Vector y_train(static_cast<Index>(train_idx.size()));
    for (std::size_t r = 0; r < train_idx.size(); ++r) {
      x_train.row(static_cast<Index>(r)) = x.row(train_idx[r]);
      y_train(static_cast<Index>(r)) = targets(train_idx[r]);
    }
    const LassoModel model = lasso_fit(x_train, y_train, alpha);
    for (Index i : test_idx) pooled(i) = x.row(i).dot(model.weights) + model.intercept;
  }

  const RegressionMetrics m = regression_metrics(targets, pooled);
  return RegressionReport{m.mae, m.rmse, m.r2, folds};
}

namespace {

double sq_dist(const Matrix& points, Index i, const Matrix& centers, Index c) {
  return (points.row(i) - centers.row(c)).squaredNorm();
}

Matrix kmeanspp_seed(const Matrix& points, Index k, std::mt19937_64& rng) {
  const Index n = points.rows();
  Matrix centers(k, points.cols());
  std::vector<bool> used(static_cast<std::size_t>(n), false);

  std::uniform_int_distribution<Index> first(0, n - 1);
  Index pick = first(rng);
  centers.row(0) = points.row(pick);
  used[static_cast<std::size_t>(pick)] = true;

  Vector dist2(n);
  for (Index i = 0; i < n; ++i) dist2(i) = sq_dist(points, i, centers, 0);
  for (Index c = 1; c < k; ++c) {
    const double total = dist2.sum();
    Index chosen = -1;
    if (total > 0.0) {
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      double target = unit(rng) * total;
      for (Index i = 0; i < n; ++i) {
        target -= dist2(i);
        if (target <= 0.0) {
          chosen = i;
          break;
        }
      }
      if (chosen < 0) chosen = n - 1;
    }
    if (chosen < 0 || used[static_cast<std::size_t>(chosen)]) {
      // Duplicate points leave no spread to sample from; take the first free slot.
      for (Index i = 0; i < n; ++i)
        if (!used[static_cast<std::size_t>(i)]) {
          chosen = i;
          break;
        }
    }
    centers.row(c) = points.row(chosen);
    used[static_cast<std::size_t>(chosen)] = true;
    for (Index i = 0; i < n; ++i)
      dist2(i) = std::min(dist2(i), sq_dist(points, i, centers, c));
  }
  return centers;
}

KMeansResult lloyd(const Matrix& points, Index k, std::mt19937_64& rng) {
  const Index n = points.rows();
  Matrix centers = kmeanspp_seed(points, k, rng);
  KMeansResult result;
  result.labels.assign(static_cast<std::size_t>(n), 0);

  constexpr int kMaxIters = 100;
  for (int iter = 0; iter < kMaxIters; ++iter) {
    bool changed = false;
    double inertia = 0.0;
    for (Index i = 0; i < n; ++i) {
      Index best = 0;
      double best_d = sq_dist(points, i, centers, 0);
      for (Index c = 1; c < k; ++c) {
        const double d = sq_dist(points, i, centers, c);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (result.labels[static_cast<std::size_t>(i)] != best) {
        result.labels[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
      inertia += best_d;
    }
    result.inertia = inertia;
    result.inertia_trace.push_back(inertia);
    if (!changed && iter > 0) break;

    Matrix sums = Matrix::Zero(k, points.cols());
    std::vector<Index> counts(static_cast<std::size_t>(k), 0);
    for (Index i = 0; i < n; ++i) {
      sums.row(result.labels[static_cast<std::size_t>(i)]) += points.row(i);
      ++counts[static_cast<std::size_t>(result.labels[static_cast<std::size_t>(i)])];
    }
    for (Index c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centers.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      } else {
        // Re-seed an emptied cluster at the point farthest from its center.
        Index far = 0;
        double far_d = -1.0;
        for (Index i = 0; i < n; ++i) {
          const double d = sq_dist(points, i, centers, result.labels[static_cast<std::size_t>(i)]);
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        centers.row(c) = points.row(far);
      }
    }
  }
  return result;
}

}  // namespace

KMeansResult kmeans_best(const Matrix& points, Index k, std::uint64_t seed, int restarts) {
  const Index n = points.rows();
  if (k < 1) throw ValidationError("k must be at least 1");
  if (k > n) throw ValidationError("k must not exceed the number of points");
  if (!points.allFinite()) throw NumericError("kmeans inputs must be finite");

  std::mt19937_64 master(seed);
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    std::mt19937_64 rng(master());
    KMeansResult run = lloyd(points, k, rng);
    if (run.inertia < best.inertia) best = std::move(run);
  }
  return best;
}

std::vector<Index> kmeans(const RegionEmbedding& emb, Index k, std::uint64_t seed) {
  return kmeans_best(emb.values, k, seed).labels;
}

namespace {

struct Contingency {
  std::map<Index, Index> rows, cols;      // label -> count
  std::map<std::pair<Index, Index>, Index> cells;
  Index n = 0;
};

Contingency cross_tabulate(const std::vector<Index>& a, const std::vector<Index>& b) {
  if (a.size() != b.size()) throw ValidationError("labelings must have equal length");
  if (a.empty()) throw ValidationError("labelings must be non-empty");
  Contingency c;
  c.n = static_cast<Index>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++c.rows[a[i]];
    ++c.cols[b[i]];
    ++c.cells[{a[i], b[i]}];
  }
  return c;
}

double entropy(const std::map<Index, Index>& counts, Index n) {
  double h = 0.0;
  for (const auto& [label, count] : counts) {
    const double p = static_cast<double>(count) / static_cast<double>(n);
    h -= p * std::log(p);
  }
  return h;
}

}  // namespace

double nmi(const std::vector<Index>& a, const std::vector<Index>& b) {
  const Contingency c = cross_tabulate(a, b);
  const double ha = entropy(c.rows, c.n);
  const double hb = entropy(c.cols, c.n);
  if (ha == 0.0 && hb == 0.0) return 1.0;  // both single-cluster: identical partitions
  if (ha == 0.0 || hb == 0.0) return 0.0;

  double mi = 0.0;
  const double n = static_cast<double>(c.n);
  for (const auto& [cell, count] : c.cells) {
    const double pij = static_cast<double>(count) / n;
    const double pi = static_cast<double>(c.rows.at(cell.first)) / n;
    const double pj = static_cast<double>(c.cols.at(cell.second)) / n;
    mi += pij * std::log(pij / (pi * pj));
  }
  return mi / std::sqrt(ha * hb);
}

double ari(const std::vector<Index>& a, const std::vector<Index>& b) {
  const Contingency c = cross_tabulate(a, b);
  const auto comb2 = [](Index x) { return static_cast<double>(x) * static_cast<double>(x - 1) / 2.0; };

  double index = 0.0;
  for (const auto& [cell, count] : c.cells) index += comb2(count);
  double sum_a = 0.0, sum_b = 0.0;
  for (const auto& [label, count] : c.rows) sum_a += comb2(count);
  for (const auto& [label, count] : c.cols) sum_b += comb2(count);
  const double pairs = comb2(c.n);
  if (pairs == 0.0) return 1.0;

  const double expected = sum_a * sum_b / pairs;
  const double max_index = 0.5 * (sum_a + sum_b);
  const double denom = max_index - expected;
  if (denom == 0.0) return 1.0;  // both partitions trivial and identical
  return (index - expected) / denom;
}

ClusteringReport clustering_eval(const RegionEmbedding& emb, const std::vector<Index>& truth,
                                 Index k, std::uint64_t seed) {
  const std::vector<Index> labels = kmeans(emb, k, seed);
  return ClusteringReport{nmi(labels, truth), ari(labels, truth), k};
}

}  // namespace mgfn
