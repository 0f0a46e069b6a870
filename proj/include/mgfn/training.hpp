#pragma once

#include "mgfn/model.hpp"
#include "mgfn/types.hpp"

#include <cstdint>
#include <vector>

namespace mgfn {

// Row-stochastic transition probabilities between regions.
struct TransitionMatrix {
  Matrix probs;
};

// Ablation switches named after the model variants they produce.
struct Ablation {
  bool no_mgf = false;    // contiguous time grouping instead of distance clustering
  bool no_ipmp = false;   // single linear projection instead of message passing
  bool no_ipmca = false;  // plain mean instead of cross attention
};

enum class Optimizer { Adam, Sgd };

struct TrainConfig {
  Index epochs = 2000;
  double learning_rate = 1e-3;
  Optimizer optimizer = Optimizer::Adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 42;
  Ablation ablation;

  void validate() const {
    if (epochs < 1) throw ValidationError("epochs must be at least 1");
    if (learning_rate < 0.0) throw ValidationError("learning rate must be non-negative");
  }
};

struct EpochStats {
  double loss = 0.0;
  double seconds = 0.0;
};

using TrainHistory = std::vector<EpochStats>;

inline ForwardOptions forward_options(const Ablation& a) {
  return ForwardOptions{a.no_ipmp, a.no_ipmca};
}

// Out-flow shares per region; rows with no out-flow become uniform so the
// objective stays finite.
TransitionMatrix transition_probs(const FlowMatrix& flow);

// Softmax over embedding inner products, self included.
TransitionMatrix estimated_probs(const RegionEmbedding& emb);

// Cross entropy sum_ij -p log p_hat; terms with p = 0 contribute exactly 0.
double loss(const TransitionMatrix& p, const TransitionMatrix& p_hat);

double kl_divergence(const TransitionMatrix& p, const TransitionMatrix& p_hat);

// Exact reverse-mode gradient of loss_scale * loss through the whole forward
// pass. The cache must come from forward() with the same patterns, params and
// options. Tensors unused under the given options keep zero gradient.
ModelParams backward(const ModelParams& params, const ModelDims& dims,
                     const ForwardOptions& opts, const ForwardCache& cache,
                     const TransitionMatrix& target, double loss_scale = 1.0);

struct TrainResult {
  ModelParams params;
  TrainHistory history;
  RegionEmbedding embeddings;
};

// Full-batch descent on the flow objective; deterministic given seed.
TrainResult train(const std::vector<MobilityPattern>& patterns, const FlowMatrix& flow,
                  const ModelDims& dims, const TrainConfig& cfg);

}  // namespace mgfn
