#pragma once

#include "mgfn/fusion.hpp"
#include "mgfn/types.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace mgfn {

struct ModelDims {
  Index n_regions = 0;
  Index n_patterns = 0;
  Index hidden = 96;
  Index heads = 4;
  Index layers = 1;

  Index head_dim() const { return hidden / heads; }

  void validate() const {
    if (n_regions < 1 || n_patterns < 1 || hidden < 1 || heads < 1 || layers < 1)
      throw ValidationError("model dimensions must be positive");
    if (hidden % heads != 0) throw ValidationError("hidden dim must be divisible by head count");
  }
};

// One attention head's projections; each maps the current feature dim to
// hidden/heads columns.
struct AttentionProjections {
  Matrix query;
  Matrix key;
  Matrix value;
};

struct IntraLayerParams {
  std::vector<AttentionProjections> source;  // per head
  std::vector<AttentionProjections> target;
  Matrix fuse;  // 2d -> d, no bias
};

struct ModelParams {
  std::vector<IntraLayerParams> intra;     // per layer
  std::vector<AttentionProjections> cross; // per head, d -> d/F
  Matrix output_weight;                    // d -> d
  Matrix output_bias;                      // 1 x d
  Matrix intra_bypass;                     // 2|V| -> d, only used when message passing is off
};

// Visits every tensor in a fixed order; the same order drives initialization,
// optimizer state and checkpoints.
template <class Params, class F>
void for_each_tensor(Params& p, F&& f) {
  for (std::size_t l = 0; l < p.intra.size(); ++l) {
    const std::string prefix = "intra." + std::to_string(l) + ".";
    for (std::size_t h = 0; h < p.intra[l].source.size(); ++h) {
      const std::string head = prefix + "source." + std::to_string(h) + ".";
      f(head + "query", p.intra[l].source[h].query);
      f(head + "key", p.intra[l].source[h].key);
      f(head + "value", p.intra[l].source[h].value);
    }
    for (std::size_t h = 0; h < p.intra[l].target.size(); ++h) {
      const std::string head = prefix + "target." + std::to_string(h) + ".";
      f(head + "query", p.intra[l].target[h].query);
      f(head + "key", p.intra[l].target[h].key);
      f(head + "value", p.intra[l].target[h].value);
    }
    f(prefix + "fuse", p.intra[l].fuse);
  }
  for (std::size_t h = 0; h < p.cross.size(); ++h) {
    const std::string head = "cross." + std::to_string(h) + ".";
    f(head + "query", p.cross[h].query);
    f(head + "key", p.cross[h].key);
    f(head + "value", p.cross[h].value);
  }
  f("output.weight", p.output_weight);
  f("output.bias", p.output_bias);
  f("intra_bypass", p.intra_bypass);
}

ModelParams zeros_like(const ModelParams& p);

std::vector<std::pair<std::string, Matrix*>> named_tensors(ModelParams& p);

// Uniform init on [-a, a] with a = 1/sqrt(fan_in + fan_out); biases zero.
// Entries are drawn tensor by tensor in for_each_tensor order.
ModelParams init_params(const ModelDims& dims, std::uint64_t seed);

struct RegionEmbedding {
  Matrix values;  // |V| x d
};

// Ablation switches for the forward path. The parameter set is the same
// either way; whatever a switch disables simply gets zero gradient.
struct ForwardOptions {
  bool bypass_message_passing = false;  // h^k = [X_s||X_t] * intra_bypass
  bool mean_cross_attention = false;    // fused = plain mean of hidden states
};

struct HeadCache {
  Matrix query, key, value;  // V x d/F
  Matrix scores;             // V x V, rows sum to 1
};

struct StreamCache {
  Matrix input;  // V x (|V| at layer 1, d deeper)
  std::vector<HeadCache> heads;
  Matrix concat;  // V x d
};

struct IntraLayerCache {
  StreamCache source, target;
  Matrix fused;  // V x d
};

struct PatternCache {
  Matrix x_source, x_target;
  std::vector<IntraLayerCache> layers;
};

struct CrossHeadCache {
  std::vector<Matrix> query, key, value;  // per pattern, V x d/F
  std::vector<Matrix> scores;             // per pattern a: V x N, rows sum to 1
};

struct ForwardCache {
  std::vector<PatternCache> patterns;
  std::vector<Matrix> hidden;  // h^k per pattern, V x d
  std::vector<CrossHeadCache> cross;
  Matrix residual_mean;  // (1/N) sum_k h^k
  Matrix fused;          // V x d
  Matrix embeddings;     // V x d
};

// (X_s, X_t): rows of X_s are out-flows, rows of X_t in-flows; X_s = X_t^T.
std::pair<Matrix, Matrix> pattern_features(const MobilityPattern& p);

// Row-stochastic attention over all regions (complete graph), scaled by
// sqrt of the per-head dim.
Matrix intra_attention_scores(const Matrix& h, const Matrix& w_query, const Matrix& w_key);

// Concatenation of per-head (scores * value-projected h) blocks, V x d.
Matrix intra_layer_forward(const Matrix& h_prev, const std::vector<AttentionProjections>& heads,
                           StreamCache* cache = nullptr);

// L stacked layers over the source/target streams, fused per layer; returns h^k.
Matrix intra_pattern_forward(const MobilityPattern& p, const ModelParams& params,
                             const ModelDims& dims, PatternCache* cache = nullptr);

// Per-region attention across the N pattern hidden states, mean-aggregated.
Matrix inter_pattern_attention(const std::vector<Matrix>& hidden, const ModelParams& params,
                               const ModelDims& dims, std::vector<CrossHeadCache>* cache = nullptr);

// Residual mean plus fused message through the linear output layer.
RegionEmbedding output_embeddings(const std::vector<Matrix>& hidden, const Matrix& fused,
                                  const ModelParams& params);

ForwardCache forward(const std::vector<MobilityPattern>& patterns, const ModelParams& params,
                     const ModelDims& dims, const ForwardOptions& opts = {});

}  // namespace mgfn
