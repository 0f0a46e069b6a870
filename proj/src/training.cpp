#include "mgfn/training.hpp"

#include "mgfn/numeric.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace mgfn {

TransitionMatrix transition_probs(const FlowMatrix& flow) {
  const auto& w = flow.weights;
  if (w.rows() != w.cols()) throw ValidationError("flow matrix must be square");
  if ((w.array() < 0.0).any()) throw ValidationError("flow matrix must be non-negative");
  const Index v = w.rows();
  Matrix probs(v, v);
  for (Index i = 0; i < v; ++i) {
    const double total = w.row(i).sum();
    if (total > 0.0)
      probs.row(i) = w.row(i) / total;
    else
      probs.row(i).setConstant(1.0 / static_cast<double>(v));
  }
  return TransitionMatrix{std::move(probs)};
}

TransitionMatrix estimated_probs(const RegionEmbedding& emb) {
  require_finite(emb.values, "embeddings");
  return TransitionMatrix{softmax_rows(emb.values * emb.values.transpose())};
}

double loss(const TransitionMatrix& p, const TransitionMatrix& p_hat) {
  double total = 0.0;
  for (Index i = 0; i < p.probs.rows(); ++i)
    for (Index j = 0; j < p.probs.cols(); ++j) {
      const double pij = p.probs(i, j);
      if (pij != 0.0) total -= pij * std::log(p_hat.probs(i, j));
    }
  return total;
}

double kl_divergence(const TransitionMatrix& p, const TransitionMatrix& p_hat) {
  double total = 0.0;
  for (Index i = 0; i < p.probs.rows(); ++i)
    for (Index j = 0; j < p.probs.cols(); ++j)
      total += xlogx_over(p.probs(i, j), p_hat.probs(i, j));
  return total;
}

namespace {

// Backward through one attention stream; accumulates projection gradients and
// returns the gradient w.r.t. the stream input.
Matrix backprop_stream(const StreamCache& sc, const std::vector<AttentionProjections>& heads,
                       std::vector<AttentionProjections>& grads, const Matrix& d_concat) {
  const Index dh = heads.front().query.cols();
  const double scale = std::sqrt(static_cast<double>(dh));
  Matrix d_input = Matrix::Zero(sc.input.rows(), sc.input.cols());
  for (std::size_t f = 0; f < heads.size(); ++f) {
    const auto& hc = sc.heads[f];
    const Matrix d_out = d_concat.middleCols(static_cast<Index>(f) * dh, dh);
    const Matrix d_scores = d_out * hc.value.transpose();
    const Matrix d_value = hc.scores.transpose() * d_out;
    const Matrix d_logits = softmax_rows_grad(hc.scores, d_scores) / scale;
    const Matrix d_query = d_logits * hc.key;
    const Matrix d_key = d_logits.transpose() * hc.query;
    grads[f].query += sc.input.transpose() * d_query;
    grads[f].key += sc.input.transpose() * d_key;
    grads[f].value += sc.input.transpose() * d_value;
    d_input += d_query * heads[f].query.transpose() + d_key * heads[f].key.transpose() +
               d_value * heads[f].value.transpose();
  }
  return d_input;
}

}  // namespace

ModelParams backward(const ModelParams& params, const ModelDims& dims, const ForwardOptions& opts,
                     const ForwardCache& cache, const TransitionMatrix& target, double loss_scale) {
  if (cache.embeddings.size() == 0) throw ValidationError("backward needs a forward cache");
  const Index v = dims.n_regions;
  const Index n = dims.n_patterns;
  const Index d = dims.hidden;
  const Index dh = dims.head_dim();
  const double inv_n = 1.0 / static_cast<double>(n);

  ModelParams grads = zeros_like(params);

  // d(loss)/d(logits) of the row softmax is p_hat - p when each target row
  // sums to one.
  const Matrix p_hat = softmax_rows(cache.embeddings * cache.embeddings.transpose());
  Matrix d_sim = (p_hat - target.probs) * loss_scale;
  Matrix d_emb = (d_sim + d_sim.transpose()) * cache.embeddings;

  // Output layer: E = (mean_k h^k + fused) W + b.
  const Matrix pre_output = cache.residual_mean + cache.fused;
  grads.output_weight += pre_output.transpose() * d_emb;
  grads.output_bias += d_emb.colwise().sum();
  const Matrix d_pre = d_emb * params.output_weight.transpose();

  std::vector<Matrix> d_hidden(static_cast<std::size_t>(n), Matrix::Zero(v, d));
  for (auto& g : d_hidden) g += d_pre * inv_n;  // residual mean path

  if (opts.mean_cross_attention) {
    for (auto& g : d_hidden) g += d_pre * inv_n;  // fused is the same mean
  } else {
    for (std::size_t f = 0; f < params.cross.size(); ++f) {
      const auto& hc = cache.cross[f];
      const auto& proj = params.cross[f];
      const double scale = std::sqrt(static_cast<double>(dh));
      // fused block = (1/N) sum_a out_a, so every out_a sees the same slice.
      const Matrix d_out = d_pre.middleCols(static_cast<Index>(f) * dh, dh) * inv_n;

      std::vector<Matrix> d_query(static_cast<std::size_t>(n), Matrix::Zero(v, dh));
      std::vector<Matrix> d_key(static_cast<std::size_t>(n), Matrix::Zero(v, dh));
      std::vector<Matrix> d_value(static_cast<std::size_t>(n), Matrix::Zero(v, dh));
      for (Index a = 0; a < n; ++a) {
        const auto& scores = hc.scores[static_cast<std::size_t>(a)];
        Matrix d_scores(v, n);
        for (Index b = 0; b < n; ++b) {
          d_scores.col(b) =
              d_out.cwiseProduct(hc.value[static_cast<std::size_t>(b)]).rowwise().sum();
          d_value[static_cast<std::size_t>(b)] += scores.col(b).asDiagonal() * d_out;
        }
        const Matrix d_logits = softmax_rows_grad(scores, d_scores) / scale;
        for (Index b = 0; b < n; ++b) {
          d_query[static_cast<std::size_t>(a)] +=
              d_logits.col(b).asDiagonal() * hc.key[static_cast<std::size_t>(b)];
          d_key[static_cast<std::size_t>(b)] +=
              d_logits.col(b).asDiagonal() * hc.query[static_cast<std::size_t>(a)];
        }
      }
      for (Index a = 0; a < n; ++a) {
        const auto& h = cache.hidden[static_cast<std::size_t>(a)];
        grads.cross[f].query += h.transpose() * d_query[static_cast<std::size_t>(a)];
        grads.cross[f].key += h.transpose() * d_key[static_cast<std::size_t>(a)];
        grads.cross[f].value += h.transpose() * d_value[static_cast<std::size_t>(a)];
        d_hidden[static_cast<std::size_t>(a)] +=
            d_query[static_cast<std::size_t>(a)] * proj.query.transpose() +
            d_key[static_cast<std::size_t>(a)] * proj.key.transpose() +
            d_value[static_cast<std::size_t>(a)] * proj.value.transpose();
      }
    }
  }

  for (Index k = 0; k < n; ++k) {
    const auto& pc = cache.patterns[static_cast<std::size_t>(k)];
    if (opts.bypass_message_passing) {
      Matrix both(v, 2 * v);
      both << pc.x_source, pc.x_target;
      grads.intra_bypass += both.transpose() * d_hidden[static_cast<std::size_t>(k)];
      continue;
    }
    Matrix d_layer_out = d_hidden[static_cast<std::size_t>(k)];
    for (Index l = dims.layers - 1; l >= 0; --l) {
      const auto& lc = pc.layers[static_cast<std::size_t>(l)];
      const auto& layer = params.intra[static_cast<std::size_t>(l)];
      auto& layer_grads = grads.intra[static_cast<std::size_t>(l)];
      Matrix both(v, 2 * d);
      both << lc.source.concat, lc.target.concat;
      layer_grads.fuse += both.transpose() * d_layer_out;
      const Matrix d_both = d_layer_out * layer.fuse.transpose();
      const Matrix d_in_source =
          backprop_stream(lc.source, layer.source, layer_grads.source, d_both.leftCols(d));
      const Matrix d_in_target =
          backprop_stream(lc.target, layer.target, layer_grads.target, d_both.rightCols(d));
      if (l > 0) d_layer_out = d_in_source + d_in_target;
    }
  }
  return grads;
}

namespace {

struct AdamState {
  std::vector<Matrix> m, v;
  long t = 0;
};

std::string param_norms(const ModelParams& p) {
  std::ostringstream os;
  for_each_tensor(p, [&os](const std::string& name, const Matrix& m) {
    os << ' ' << name << '=' << m.norm();
  });
  return os.str();
}

}  // namespace

TrainResult train(const std::vector<MobilityPattern>& patterns, const FlowMatrix& flow,
                  const ModelDims& dims, const TrainConfig& cfg) {
  cfg.validate();
  dims.validate();
  const ForwardOptions opts = forward_options(cfg.ablation);
  const TransitionMatrix target = transition_probs(flow);
  if (target.probs.rows() != dims.n_regions)
    throw ValidationError("flow matrix size does not match model dims");

  TrainResult result;
  result.params = init_params(dims, cfg.seed);

  AdamState adam;
  if (cfg.optimizer == Optimizer::Adam) {
    for_each_tensor(result.params, [&adam](const std::string&, Matrix& m) {
      adam.m.push_back(Matrix::Zero(m.rows(), m.cols()));
      adam.v.push_back(Matrix::Zero(m.rows(), m.cols()));
    });
  }

  result.history.reserve(static_cast<std::size_t>(cfg.epochs));
  for (Index epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    ForwardCache cache = forward(patterns, result.params, dims, opts);
    const TransitionMatrix p_hat = estimated_probs(RegionEmbedding{cache.embeddings});
    const double epoch_loss = loss(target, p_hat);
    if (!std::isfinite(epoch_loss))
      throw NumericError("non-finite loss at epoch " + std::to_string(epoch) +
                         "; parameter norms:" + param_norms(result.params));

    ModelParams grads = backward(result.params, dims, opts, cache, target);
    const auto param_slots = named_tensors(result.params);
    const auto grad_slots = named_tensors(grads);

    if (cfg.optimizer == Optimizer::Adam) {
      ++adam.t;
      const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(adam.t));
      const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(adam.t));
      for (std::size_t i = 0; i < param_slots.size(); ++i) {
        const Matrix& g = *grad_slots[i].second;
        adam.m[i] = cfg.beta1 * adam.m[i] + (1.0 - cfg.beta1) * g;
        adam.v[i] = cfg.beta2 * adam.v[i] + (1.0 - cfg.beta2) * g.cwiseProduct(g);
        param_slots[i].second->array() -= cfg.learning_rate * (adam.m[i].array() / bc1) /
                                          ((adam.v[i].array() / bc2).sqrt() + cfg.epsilon);
      }
    } else {
      for (std::size_t i = 0; i < param_slots.size(); ++i)
        *param_slots[i].second -= cfg.learning_rate * (*grad_slots[i].second);
    }

    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started;
    result.history.push_back(EpochStats{epoch_loss, elapsed.count()});
  }

  ForwardCache final_cache = forward(patterns, result.params, dims, opts);
  result.embeddings = RegionEmbedding{final_cache.embeddings};
  return result;
}

}  // namespace mgfn
