#include "mgfn/training.hpp"

#include "mgfn/fusion.hpp"
#include "mgfn/ingest.hpp"
#include "mgfn/mgd.hpp"
#include "mgfn/synth.hpp"

#include "gradcheck.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace mgfn;

namespace {

using gradcheck::random_patterns;
using gradcheck::random_target;

double max_gradient_error(const ModelDims& dims, const ForwardOptions& opts, std::uint64_t seed) {
  return gradcheck::max_error(dims, opts, seed);
}

}  // namespace

TEST_SUITE("training") {

TEST_CASE("transition probs normalize rows") {
  Matrix flow(3, 3);
  flow << 0, 3, 1,
          2, 2, 2,
          0, 0, 0;
  const TransitionMatrix p = transition_probs(FlowMatrix{flow});
  CHECK(p.probs(0, 0) == 0.0);
  CHECK(p.probs(0, 1) == doctest::Approx(0.75));
  CHECK(p.probs(0, 2) == doctest::Approx(0.25));
  for (Index j = 0; j < 3; ++j) {
    CHECK(p.probs(1, j) == doctest::Approx(1.0 / 3.0));  // uniform flow row
    CHECK(p.probs(2, j) == doctest::Approx(1.0 / 3.0));  // zero out-flow row
  }
}

TEST_CASE("row scaling leaves transition probs unchanged") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> weight(0.1, 5.0);
  Matrix flow(4, 4);
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 4; ++j) flow(i, j) = weight(rng);
  const TransitionMatrix base = transition_probs(FlowMatrix{flow});
  Matrix scaled = flow;
  scaled.row(2) *= 17.0;
  const TransitionMatrix after = transition_probs(FlowMatrix{scaled});
  CHECK(after.probs.isApprox(base.probs, 1e-12));
}

TEST_CASE("estimated probs match a hand softmax") {
  RegionEmbedding emb;
  emb.values = Matrix::Identity(2, 2);
  const TransitionMatrix p = estimated_probs(emb);
  const double e = std::exp(1.0);
  CHECK(p.probs(0, 0) == doctest::Approx(e / (e + 1.0)).epsilon(1e-12));
  CHECK(p.probs(0, 1) == doctest::Approx(1.0 / (e + 1.0)).epsilon(1e-12));
  CHECK(p.probs.row(0).sum() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(p.probs.row(1).sum() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("identical embeddings estimate uniform rows") {
  RegionEmbedding emb;
  emb.values = Matrix::Ones(3, 4);
  const TransitionMatrix p = estimated_probs(emb);
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j) CHECK(p.probs(i, j) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("cross entropy against a uniform estimate is log V per one-hot row") {
  Matrix p = Matrix::Zero(4, 4);
  for (Index i = 0; i < 4; ++i) p(i, (i + 1) % 4) = 1.0;
  Matrix q = Matrix::Constant(4, 4, 0.25);
  CHECK(loss(TransitionMatrix{p}, TransitionMatrix{q}) ==
        doctest::Approx(4.0 * std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("cross entropy of a distribution with itself is its entropy") {
  Matrix p = Matrix::Constant(2, 2, 0.5);
  CHECK(loss(TransitionMatrix{p}, TransitionMatrix{p}) ==
        doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("cross entropy is minimized at the target") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> weight(0.01, 1.0);
  for (int round = 0; round < 20; ++round) {
    Matrix p(3, 3), q(3, 3);
    for (Index i = 0; i < 3; ++i) {
      for (Index j = 0; j < 3; ++j) {
        p(i, j) = weight(rng);
        q(i, j) = weight(rng);
      }
      p.row(i) /= p.row(i).sum();
      q.row(i) /= q.row(i).sum();
    }
    CHECK(loss(TransitionMatrix{p}, TransitionMatrix{p}) <=
          loss(TransitionMatrix{p}, TransitionMatrix{q}) + 1e-12);
    CHECK(loss(TransitionMatrix{p}, TransitionMatrix{q}) >= 0.0);
  }
}

TEST_CASE("zero target entries contribute exactly zero") {
  Matrix p = Matrix::Zero(2, 2);
  p(0, 1) = 1.0;
  p(1, 0) = 1.0;
  Matrix q(2, 2);
  q << 1e-300, 1.0 - 1e-300, 0.5, 0.5;
  const double value = loss(TransitionMatrix{p}, TransitionMatrix{q});
  CHECK(std::isfinite(value));
  CHECK(value == doctest::Approx(-std::log(1.0 - 1e-300) - std::log(0.5)));
}

TEST_CASE("analytic gradients match finite differences") {
  const double worst = max_gradient_error(ModelDims{4, 2, 4, 2, 1}, ForwardOptions{}, 100);
  CHECK(worst <= 1e-4);
}

TEST_CASE("analytic gradients match finite differences with two layers") {
  const double worst = max_gradient_error(ModelDims{3, 2, 4, 2, 2}, ForwardOptions{}, 200);
  CHECK(worst <= 1e-4);
}

TEST_CASE("analytic gradients match finite differences under each ablation") {
  CHECK(max_gradient_error(ModelDims{3, 2, 4, 2, 1}, ForwardOptions{true, false}, 300) <= 1e-4);
  CHECK(max_gradient_error(ModelDims{3, 2, 4, 2, 1}, ForwardOptions{false, true}, 400) <= 1e-4);
  CHECK(max_gradient_error(ModelDims{3, 2, 4, 2, 1}, ForwardOptions{true, true}, 500) <= 1e-4);
}

TEST_CASE("parameters off the forward path get zero gradient") {
  const ModelDims dims{4, 2, 4, 2, 1};
  const auto patterns = random_patterns(dims, 31);
  const TransitionMatrix target = random_target(4, 32);
  const ModelParams params = init_params(dims, 33);

  ForwardOptions full;
  ModelParams g = backward(params, dims, full, forward(patterns, params, dims, full), target);
  CHECK(g.intra_bypass.isZero(0.0));

  ForwardOptions no_cross{false, true};
  g = backward(params, dims, no_cross, forward(patterns, params, dims, no_cross), target);
  for (const auto& head : g.cross) {
    CHECK(head.query.isZero(0.0));
    CHECK(head.key.isZero(0.0));
    CHECK(head.value.isZero(0.0));
  }

  ForwardOptions no_intra{true, false};
  g = backward(params, dims, no_intra, forward(patterns, params, dims, no_intra), target);
  for (const auto& layer : g.intra) {
    CHECK(layer.fuse.isZero(0.0));
    for (const auto* stream : {&layer.source, &layer.target})
      for (const auto& head : *stream) {
        CHECK(head.query.isZero(0.0));
        CHECK(head.key.isZero(0.0));
        CHECK(head.value.isZero(0.0));
      }
  }
}

TEST_CASE("doubling the loss doubles every gradient") {
  const ModelDims dims{4, 2, 4, 2, 1};
  const auto patterns = random_patterns(dims, 41);
  const TransitionMatrix target = random_target(4, 42);
  ModelParams params = init_params(dims, 43);
  const ForwardCache cache = forward(patterns, params, dims);
  ModelParams g1 = backward(params, dims, {}, cache, target, 1.0);
  ModelParams g2 = backward(params, dims, {}, cache, target, 2.0);
  const auto t1 = named_tensors(g1);
  const auto t2 = named_tensors(g2);
  for (std::size_t i = 0; i < t1.size(); ++i)
    CHECK((2.0 * *t1[i].second - *t2[i].second).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("zero learning rate leaves parameters untouched") {
  const ModelDims dims{4, 2, 4, 2, 1};
  const auto patterns = random_patterns(dims, 51);
  Matrix flow = Matrix::Ones(4, 4);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.learning_rate = 0.0;
  cfg.seed = 52;
  TrainResult result = train(patterns, FlowMatrix{flow}, dims, cfg);
  ModelParams init = init_params(dims, 52);
  auto before = named_tensors(init);
  auto after = named_tensors(result.params);
  for (std::size_t i = 0; i < before.size(); ++i)
    CHECK((before[i].second->array() == after[i].second->array()).all());
  for (const auto& epoch : result.history) CHECK(epoch.loss == result.history.front().loss);
}

TEST_CASE("training is reproducible for a fixed seed") {
  const ModelDims dims{4, 2, 4, 2, 1};
  const auto patterns = random_patterns(dims, 61);
  Matrix flow = Matrix::Ones(4, 4);
  flow(0, 1) = 5.0;
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.seed = 62;
  const TrainResult a = train(patterns, FlowMatrix{flow}, dims, cfg);
  const TrainResult b = train(patterns, FlowMatrix{flow}, dims, cfg);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t e = 0; e < a.history.size(); ++e)
    CHECK(a.history[e].loss == b.history[e].loss);
  CHECK((a.embeddings.values.array() == b.embeddings.values.array()).all());
}

TEST_CASE("adam reduces the loss on a small instance") {
  const ModelDims dims{4, 2, 4, 2, 1};
  const auto patterns = random_patterns(dims, 71);
  Matrix flow = Matrix::Zero(4, 4);
  flow(0, 1) = 10.0;
  flow(1, 2) = 7.0;
  flow(2, 3) = 4.0;
  flow(3, 0) = 2.0;
  TrainConfig cfg;
  cfg.epochs = 150;
  cfg.seed = 72;
  const TrainResult result = train(patterns, FlowMatrix{flow}, dims, cfg);
  CHECK(result.history.back().loss < result.history.front().loss);
}

TEST_CASE("exploding updates abort with a numeric error") {
  const ModelDims dims{4, 2, 4, 2, 1};
  const auto patterns = random_patterns(dims, 81);
  Matrix flow = Matrix::Ones(4, 4);
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.optimizer = Optimizer::Sgd;
  cfg.learning_rate = 1e12;
  cfg.seed = 82;
  CHECK_THROWS_AS(train(patterns, FlowMatrix{flow}, dims, cfg), NumericError);
}

TEST_CASE("training on the synthetic city reaches the loss target") {
  SynthConfig synth_cfg;  // defaults: 10+10 regions, 7 days, noise on
  const SynthCity city = generate_city(synth_cfg);
  const DistanceMatrix d = pairwise_mgd(city.multigraph, MgdConfig{});
  const ClusterAssignment asg = agglomerative_cluster(d, 7);
  const auto patterns = fuse_patterns(city.multigraph, asg);
  const FlowMatrix flow = aggregate_flow(city.multigraph);

  ModelDims dims{city.multigraph.n_regions(), 7, 96, 4, 1};
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.learning_rate = 1e-3;
  cfg.seed = 1;
  const TrainResult result = train(patterns, flow, dims, cfg);
  CHECK(result.history.back().loss <= 0.8 * result.history.front().loss);

  const TransitionMatrix target = transition_probs(flow);
  const double kl_final = kl_divergence(target, estimated_probs(result.embeddings));
  CHECK(std::isfinite(kl_final));
  CHECK(kl_final >= 0.0);
}

}  // TEST_SUITE
