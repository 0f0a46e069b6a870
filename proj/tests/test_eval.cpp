#include "mgfn/eval.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace mgfn;

TEST_SUITE("eval") {

TEST_CASE("lasso recovers a linear relation as alpha vanishes") {
  const Index n = 40;
  Matrix x(n, 3);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < 3; ++j) x(i, j) = u(rng);
  const Vector y = 2.0 * x.col(1);

  const LassoModel model = lasso_fit(x, y, 1e-10);
  CHECK(model.weights(1) == doctest::Approx(2.0).epsilon(1e-4));
  CHECK(std::abs(model.weights(0)) < 1e-4);
  CHECK(std::abs(model.weights(2)) < 1e-4);
  CHECK((y - lasso_predict(model, x)).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("huge alpha shrinks every weight to zero") {
  Matrix x(6, 2);
  x << 1, 0, 2, 1, 3, 0, 4, 1, 5, 0, 6, 1;
  Vector y(6);
  y << 1, 3, 2, 5, 3, 7;
  // Threshold in the standardized problem.
  Vector mean = x.colwise().mean();
  double alpha_max = 0.0;
  for (Index j = 0; j < 2; ++j) {
    const Vector centered = x.col(j).array() - mean(j);
    const Vector xs = centered / std::sqrt(centered.squaredNorm() / 6.0);
    alpha_max = std::max(alpha_max, std::abs(xs.dot(y) / 6.0));
  }
  const LassoModel model = lasso_fit(x, y, alpha_max * 1.0001);
  CHECK(model.weights.isZero(0.0));
  CHECK(model.intercept == doctest::Approx(y.mean()));
}

TEST_CASE("constant targets give zero weights and the constant intercept") {
  Matrix x = Matrix::Random(8, 3);
  const Vector y = Vector::Constant(8, 4.25);
  const LassoModel model = lasso_fit(x, y, 0.5);
  CHECK(model.weights.isZero(0.0));
  CHECK(model.intercept == doctest::Approx(4.25));
}

TEST_CASE("constant feature columns are ignored") {
  Matrix x(10, 2);
  for (Index i = 0; i < 10; ++i) x.row(i) << 3.0, static_cast<double>(i);
  const Vector y = x.col(1) * 1.5;
  const LassoModel model = lasso_fit(x, y, 1e-9);
  CHECK(model.weights(0) == 0.0);
  CHECK(model.weights(1) == doctest::Approx(1.5).epsilon(1e-4));
}

TEST_CASE("lasso objective never increases across sweeps") {
  Matrix x = Matrix::Random(30, 6);
  Vector y = x * Vector::LinSpaced(6, -1.0, 2.0) + 0.1 * Vector::Random(30);
  const LassoModel model = lasso_fit(x, y, 0.05);
  REQUIRE(!model.objective_trace.empty());
  for (std::size_t s = 1; s < model.objective_trace.size(); ++s)
    CHECK(model.objective_trace[s] <= model.objective_trace[s - 1] + 1e-12);
}

TEST_CASE("lasso rejects bad inputs") {
  Matrix x = Matrix::Random(5, 2);
  Vector y = Vector::Random(5);
  CHECK_THROWS_AS(lasso_fit(x, y, 0.0), ValidationError);
  CHECK_THROWS_AS(lasso_fit(Matrix::Random(1, 2), Vector::Random(1), 1.0), ValidationError);
  Matrix bad = x;
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(lasso_fit(bad, y, 1.0), NumericError);
}

TEST_CASE("regression metrics reproduce hand values") {
  Vector y(2), pred(2);
  y << 1.0, 2.0;
  pred << 0.0, 3.0;  // residuals {1, -1}
  const RegressionMetrics m = regression_metrics(y, pred);
  CHECK(m.mae == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.rmse == doctest::Approx(1.0).epsilon(1e-12));

  Vector y2(4);
  y2 << 1, 2, 3, 4;
  const RegressionMetrics exact = regression_metrics(y2, y2);
  CHECK(exact.mae == 0.0);
  CHECK(exact.rmse == 0.0);
  CHECK(exact.r2 == 1.0);

  const Vector mean_pred = Vector::Constant(4, y2.mean());
  CHECK(regression_metrics(y2, mean_pred).r2 == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("fold protocol is deterministic and pools out-of-fold predictions") {
  const Index n = 25;
  RegionEmbedding emb;
  emb.values = Matrix(n, 2);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (Index i = 0; i < n; ++i) emb.values.row(i) << u(rng), u(rng);
  const Vector y = 3.0 * emb.values.col(0) - emb.values.col(1);

  const RegressionReport a = regression_eval(emb, y, 1e-8, 5);
  const RegressionReport b = regression_eval(emb, y, 1e-8, 5);
  CHECK(a.mae == b.mae);
  CHECK(a.rmse == b.rmse);
  CHECK(a.r2 == b.r2);
  CHECK(a.fold_count == 5);
  CHECK(a.r2 > 0.9);
  CHECK_THROWS_AS(regression_eval(emb, y, 1e-8, 26), ValidationError);
  CHECK_THROWS_AS(regression_eval(emb, y, 1e-8, 1), ValidationError);
}

TEST_CASE("kmeans separates well-split 1-d points") {
  Matrix points(4, 1);
  points << 0.0, 0.1, 10.0, 10.1;
  const auto labels = kmeans(RegionEmbedding{points}, 2, 9);
  CHECK(labels[0] == labels[1]);
  CHECK(labels[2] == labels[3]);
  CHECK(labels[0] != labels[2]);
}

TEST_CASE("kmeans degenerate cluster counts") {
  Matrix points = Matrix::Random(6, 2);
  const auto one = kmeans(RegionEmbedding{points}, 1, 3);
  CHECK(std::all_of(one.begin(), one.end(), [&](Index l) { return l == one[0]; }));

  const KMeansResult each = kmeans_best(points, 6, 3);
  CHECK(each.inertia == doctest::Approx(0.0));
  std::vector<Index> sorted = each.labels;
  std::sort(sorted.begin(), sorted.end());
  CHECK(std::unique(sorted.begin(), sorted.end()) == sorted.end());

  CHECK_THROWS_AS(kmeans(RegionEmbedding{points}, 0, 3), ValidationError);
  CHECK_THROWS_AS(kmeans(RegionEmbedding{points}, 7, 3), ValidationError);
}

TEST_CASE("kmeans inertia never increases across lloyd iterations") {
  Matrix points = Matrix::Random(40, 3);
  const KMeansResult result = kmeans_best(points, 4, 17);
  REQUIRE(!result.inertia_trace.empty());
  for (std::size_t i = 1; i < result.inertia_trace.size(); ++i)
    CHECK(result.inertia_trace[i] <= result.inertia_trace[i - 1] + 1e-12);
}

TEST_CASE("kmeans is deterministic given the seed") {
  Matrix points = Matrix::Random(30, 2);
  CHECK(kmeans(RegionEmbedding{points}, 3, 21) == kmeans(RegionEmbedding{points}, 3, 21));
}

TEST_CASE("nmi oracle values") {
  CHECK(nmi({0, 0, 1, 1}, {0, 0, 1, 1}) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(nmi({0, 0, 1, 1}, {1, 1, 0, 0}) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(nmi({0, 0, 1, 1}, {0, 1, 0, 1}) == doctest::Approx(0.0).epsilon(1e-9));
  // Single-cluster conventions.
  CHECK(nmi({0, 0, 0}, {1, 1, 1}) == 1.0);
  CHECK(nmi({0, 0, 0}, {0, 1, 2}) == 0.0);
  CHECK_THROWS_AS(nmi({0, 1}, {0, 1, 2}), ValidationError);
}

TEST_CASE("ari oracle values") {
  CHECK(ari({0, 0, 1, 1}, {0, 0, 1, 1}) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(ari({0, 0, 1, 1}, {1, 1, 0, 0}) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(ari({0, 0, 1, 1}, {0, 1, 0, 1}) == doctest::Approx(-0.5).epsilon(1e-9));
  CHECK_THROWS_AS(ari({0, 1}, {0, 1, 2}), ValidationError);
}

TEST_CASE("nmi and ari are symmetric and permutation invariant") {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<Index> label(0, 3);
  for (int round = 0; round < 10; ++round) {
    std::vector<Index> a(30), b(30);
    for (auto& l : a) l = label(rng);
    for (auto& l : b) l = label(rng);
    CHECK(nmi(a, b) == doctest::Approx(nmi(b, a)).epsilon(1e-12));
    CHECK(ari(a, b) == doctest::Approx(ari(b, a)).epsilon(1e-12));

    std::vector<Index> permuted = a;
    for (auto& l : permuted) l = 3 - l;  // relabel
    CHECK(nmi(permuted, b) == doctest::Approx(nmi(a, b)).epsilon(1e-12));
    CHECK(ari(permuted, b) == doctest::Approx(ari(a, b)).epsilon(1e-12));
    CHECK(nmi(a, b) >= 0.0);
    CHECK(nmi(a, b) <= 1.0 + 1e-12);
    CHECK(ari(a, b) >= -1.0);
    CHECK(ari(a, b) <= 1.0 + 1e-12);
  }
}

}  // TEST_SUITE
