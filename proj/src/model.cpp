#include "mgfn/model.hpp"

#include "mgfn/numeric.hpp"

#include <cmath>
#include <random>

namespace mgfn {

namespace {

// 53-bit uniform in [0, 1).
double next_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void fill_uniform(Matrix& m, std::mt19937_64& rng) {
  const double limit = 1.0 / std::sqrt(static_cast<double>(m.rows() + m.cols()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = (2.0 * next_unit(rng) - 1.0) * limit;
}

ModelParams allocate_params(const ModelDims& dims) {
  dims.validate();
  const Index v = dims.n_regions;
  const Index d = dims.hidden;
  const Index dh = dims.head_dim();

  ModelParams p;
  p.intra.resize(static_cast<std::size_t>(dims.layers));
  for (Index l = 0; l < dims.layers; ++l) {
    const Index in = (l == 0) ? v : d;
    auto& layer = p.intra[static_cast<std::size_t>(l)];
    layer.source.resize(static_cast<std::size_t>(dims.heads));
    layer.target.resize(static_cast<std::size_t>(dims.heads));
    for (auto* stream : {&layer.source, &layer.target})
      for (auto& head : *stream) {
        head.query = Matrix(in, dh);
        head.key = Matrix(in, dh);
        head.value = Matrix(in, dh);
      }
    layer.fuse = Matrix(2 * d, d);
  }
  p.cross.resize(static_cast<std::size_t>(dims.heads));
  for (auto& head : p.cross) {
    head.query = Matrix(d, dh);
    head.key = Matrix(d, dh);
    head.value = Matrix(d, dh);
  }
  p.output_weight = Matrix(d, d);
  p.output_bias = Matrix(1, d);
  p.intra_bypass = Matrix(2 * v, d);
  return p;
}

}  // namespace

ModelParams zeros_like(const ModelParams& p) {
  ModelParams z = p;
  for_each_tensor(z, [](const std::string&, Matrix& m) { m.setZero(); });
  return z;
}

std::vector<std::pair<std::string, Matrix*>> named_tensors(ModelParams& p) {
  std::vector<std::pair<std::string, Matrix*>> out;
  for_each_tensor(p, [&out](const std::string& name, Matrix& m) { out.emplace_back(name, &m); });
  return out;
}

ModelParams init_params(const ModelDims& dims, std::uint64_t seed) {
  ModelParams p = allocate_params(dims);
  std::mt19937_64 rng(seed);
  for_each_tensor(p, [&rng](const std::string& name, Matrix& m) {
    if (name.ends_with("bias"))
      m.setZero();
    else
      fill_uniform(m, rng);
  });
  return p;
}

std::pair<Matrix, Matrix> pattern_features(const MobilityPattern& p) {
  return {p.weights, p.weights.transpose()};
}

Matrix intra_attention_scores(const Matrix& h, const Matrix& w_query, const Matrix& w_key) {
  const double scale = std::sqrt(static_cast<double>(w_query.cols()));
  const Matrix q = h * w_query;
  const Matrix k = h * w_key;
  return softmax_rows((q * k.transpose()) / scale);
}

Matrix intra_layer_forward(const Matrix& h_prev, const std::vector<AttentionProjections>& heads,
                           StreamCache* cache) {
  if (heads.empty()) throw ValidationError("attention layer needs at least one head");
  if (h_prev.cols() != heads.front().query.rows())
    throw ValidationError("hidden state width does not match projection shape");
  const Index v = h_prev.rows();
  const Index dh = heads.front().query.cols();
  const double scale = std::sqrt(static_cast<double>(dh));

  Matrix concat(v, dh * static_cast<Index>(heads.size()));
  if (cache) {
    cache->input = h_prev;
    cache->heads.resize(heads.size());
  }
  for (std::size_t f = 0; f < heads.size(); ++f) {
    Matrix q = h_prev * heads[f].query;
    Matrix k = h_prev * heads[f].key;
    Matrix val = h_prev * heads[f].value;
    Matrix scores = softmax_rows((q * k.transpose()) / scale);
    concat.middleCols(static_cast<Index>(f) * dh, dh) = scores * val;
    if (cache)
      cache->heads[f] = HeadCache{std::move(q), std::move(k), std::move(val), std::move(scores)};
  }
  if (cache) cache->concat = concat;
  return concat;
}

Matrix intra_pattern_forward(const MobilityPattern& p, const ModelParams& params,
                             const ModelDims& dims, PatternCache* cache) {
  auto [x_source, x_target] = pattern_features(p);
  if (x_source.rows() != dims.n_regions)
    throw ValidationError("pattern size does not match model dims");
  if (cache) {
    cache->x_source = x_source;
    cache->x_target = x_target;
    cache->layers.resize(static_cast<std::size_t>(dims.layers));
  }

  Matrix h_source = std::move(x_source);
  Matrix h_target = std::move(x_target);
  Matrix fused;
  for (Index l = 0; l < dims.layers; ++l) {
    const auto& layer = params.intra[static_cast<std::size_t>(l)];
    IntraLayerCache* lc = cache ? &cache->layers[static_cast<std::size_t>(l)] : nullptr;
    Matrix out_source = intra_layer_forward(h_source, layer.source, lc ? &lc->source : nullptr);
    Matrix out_target = intra_layer_forward(h_target, layer.target, lc ? &lc->target : nullptr);
    Matrix both(out_source.rows(), out_source.cols() + out_target.cols());
    both << out_source, out_target;
    fused = both * layer.fuse;
    if (lc) lc->fused = fused;
    // Deeper layers consume the fused state on both streams.
    h_source = fused;
    h_target = fused;
  }
  return fused;
}

Matrix inter_pattern_attention(const std::vector<Matrix>& hidden, const ModelParams& params,
                               const ModelDims& dims, std::vector<CrossHeadCache>* cache) {
  const Index n = static_cast<Index>(hidden.size());
  if (n < 1) throw ValidationError("cross attention needs at least one pattern");
  const Index v = hidden.front().rows();
  const Index dh = dims.head_dim();
  const double scale = std::sqrt(static_cast<double>(dh));

  if (cache) cache->resize(params.cross.size());
  Matrix fused = Matrix::Zero(v, dims.hidden);
  for (std::size_t f = 0; f < params.cross.size(); ++f) {
    const auto& proj = params.cross[f];
    std::vector<Matrix> query(static_cast<std::size_t>(n)), key(static_cast<std::size_t>(n)),
        value(static_cast<std::size_t>(n)), scores(static_cast<std::size_t>(n));
    for (Index a = 0; a < n; ++a) {
      const auto& h = hidden[static_cast<std::size_t>(a)];
      query[static_cast<std::size_t>(a)] = h * proj.query;
      key[static_cast<std::size_t>(a)] = h * proj.key;
      value[static_cast<std::size_t>(a)] = h * proj.value;
    }
    for (Index a = 0; a < n; ++a) {
      // Row i holds the logits of region i's attention over the N patterns.
      Matrix logits(v, n);
      for (Index b = 0; b < n; ++b)
        logits.col(b) = query[static_cast<std::size_t>(a)]
                            .cwiseProduct(key[static_cast<std::size_t>(b)])
                            .rowwise()
                            .sum() /
                        scale;
      scores[static_cast<std::size_t>(a)] = softmax_rows(logits);
    }
    auto block = fused.middleCols(static_cast<Index>(f) * dh, dh);
    for (Index a = 0; a < n; ++a) {
      Matrix out = Matrix::Zero(v, dh);
      for (Index b = 0; b < n; ++b)
        out += scores[static_cast<std::size_t>(a)].col(b).asDiagonal() *
               value[static_cast<std::size_t>(b)];
      block += out / static_cast<double>(n);
    }
    if (cache)
      (*cache)[f] = CrossHeadCache{std::move(query), std::move(key), std::move(value),
                                   std::move(scores)};
  }
  return fused;
}

RegionEmbedding output_embeddings(const std::vector<Matrix>& hidden, const Matrix& fused,
                                  const ModelParams& params) {
  if (hidden.empty()) throw ValidationError("output layer needs hidden states");
  Matrix mean = Matrix::Zero(hidden.front().rows(), hidden.front().cols());
  for (const auto& h : hidden) mean += h;
  mean /= static_cast<double>(hidden.size());
  Matrix out = (mean + fused) * params.output_weight;
  out.rowwise() += params.output_bias.row(0);
  return RegionEmbedding{std::move(out)};
}

ForwardCache forward(const std::vector<MobilityPattern>& patterns, const ModelParams& params,
                     const ModelDims& dims, const ForwardOptions& opts) {
  dims.validate();
  if (static_cast<Index>(patterns.size()) != dims.n_patterns)
    throw ValidationError("pattern count does not match model dims");
  const Index v = dims.n_regions;
  const Index n = dims.n_patterns;

  ForwardCache cache;
  cache.patterns.resize(patterns.size());
  cache.hidden.resize(patterns.size());
  for (std::size_t k = 0; k < patterns.size(); ++k) {
    if (patterns[k].weights.rows() != v || patterns[k].weights.cols() != v)
      throw ValidationError("pattern weight matrix does not match model dims");
    if (opts.bypass_message_passing) {
      auto [x_source, x_target] = pattern_features(patterns[k]);
      Matrix both(v, 2 * v);
      both << x_source, x_target;
      cache.patterns[k].x_source = std::move(x_source);
      cache.patterns[k].x_target = std::move(x_target);
      cache.hidden[k] = both * params.intra_bypass;
    } else {
      cache.hidden[k] = intra_pattern_forward(patterns[k], params, dims, &cache.patterns[k]);
    }
  }

  cache.residual_mean = Matrix::Zero(v, dims.hidden);
  for (const auto& h : cache.hidden) cache.residual_mean += h;
  cache.residual_mean /= static_cast<double>(n);

  if (opts.mean_cross_attention)
    cache.fused = cache.residual_mean;
  else
    cache.fused = inter_pattern_attention(cache.hidden, params, dims, &cache.cross);

  cache.embeddings = output_embeddings(cache.hidden, cache.fused, params).values;
  return cache;
}

}  // namespace mgfn
