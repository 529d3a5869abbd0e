#include "gridres/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <Eigen/Dense>
#include <fmt/core.h>

#include "gridres/error.hpp"

namespace gridres {

using Eigen::Map;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using ConstMatMap = Map<const MatrixXd>;
using MatMap = Map<MatrixXd>;
using ConstVecMap = Map<const VectorXd>;
using VecMap = Map<VectorXd>;

SurrogateConfig SurrogateConfig::case_a(int input_dim, int n_systems) {
  SurrogateConfig c;
  c.gru_hidden = 128;
  c.gru_layers = 1;
  c.mlp_layers = 2;
  c.gru_dropout = 0.0;
  c.mlp_dropout = 0.2;
  c.learning_rate = 0.00623;
  c.weight_decay = 0.00058;
  c.epochs = 500;
  c.input_dim = input_dim;
  c.n_systems = n_systems;
  return c;
}

SurrogateConfig SurrogateConfig::case_b(int input_dim, int n_systems) {
  SurrogateConfig c;
  c.gru_hidden = 16;
  c.gru_layers = 4;
  c.mlp_layers = 3;
  c.gru_dropout = 0.0;
  c.mlp_dropout = 0.2;
  c.learning_rate = 0.00819;
  c.weight_decay = 0.00002;
  c.epochs = 200;
  c.input_dim = input_dim;
  c.n_systems = n_systems;
  return c;
}

void SurrogateConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::invalid_argument, fmt::format("surrogate config: {}", what));
  };
  require(gru_hidden >= 1 && gru_layers >= 1 && mlp_layers >= 1, "layer sizes and counts must be >= 1");
  require(mlp_hidden >= 0, "mlp_hidden must be >= 0");
  require(gru_dropout >= 0.0 && gru_dropout <= 0.8, "gru_dropout must lie in [0, 0.8]");
  require(mlp_dropout >= 0.0 && mlp_dropout <= 0.8, "mlp_dropout must lie in [0, 0.8]");
  require(learning_rate > 0.0, "learning_rate must be > 0");
  require(weight_decay >= 0.0, "weight_decay must be >= 0");
  require(epochs >= 1 && batch_size >= 1, "epochs and batch_size must be >= 1");
  require(input_dim >= 1 && n_systems >= 1, "input_dim and n_systems must be >= 1");
}

ParameterLayout ParameterLayout::build(const SurrogateConfig& c) {
  ParameterLayout layout;
  auto add = [&](std::string name, std::size_t rows, std::size_t cols) {
    layout.blocks.push_back({std::move(name), layout.total, rows, cols});
    layout.total += rows * cols;
  };
  const auto h = static_cast<std::size_t>(c.gru_hidden);
  for (int l = 0; l < c.gru_layers; ++l) {
    const auto in = l == 0 ? static_cast<std::size_t>(c.input_dim) : h;
    add(fmt::format("gru[{}].W", l), 3 * h, in);
    add(fmt::format("gru[{}].U", l), 3 * h, h);
    add(fmt::format("gru[{}].b", l), 3 * h, 1);
  }
  const auto width = static_cast<std::size_t>(c.decoder_width());
  for (int j = 0; j < c.mlp_layers; ++j) {
    const auto in = j == 0 ? h + static_cast<std::size_t>(c.n_systems) : width;
    const auto out = j + 1 == c.mlp_layers ? std::size_t{1} : width;
    add(fmt::format("mlp[{}].W", j), out, in);
    add(fmt::format("mlp[{}].b", j), out, 1);
  }
  return layout;
}

FeatureScaler FeatureScaler::fit(std::span<const Sequence* const> sequences) {
  FeatureScaler s;
  for (const Sequence* seq : sequences) {
    if (s.min.empty()) {
      s.min.assign(seq->dim, std::numeric_limits<double>::infinity());
      s.max.assign(seq->dim, -std::numeric_limits<double>::infinity());
    }
    if (seq->dim != s.min.size()) throw Error(ErrorCode::dimension_mismatch, "scaler: inconsistent feature dimension");
    for (std::size_t t = 0; t < seq->steps; ++t) {
      for (std::size_t j = 0; j < seq->dim; ++j) {
        s.min[j] = std::min(s.min[j], seq->at(t, j));
        s.max[j] = std::max(s.max[j], seq->at(t, j));
      }
    }
  }
  for (std::size_t j = 0; j < s.min.size(); ++j) {
    if (!std::isfinite(s.min[j])) s.min[j] = s.max[j] = 0.0;
  }
  return s;
}

std::size_t FeatureScaler::transform(Sequence& seq) const {
  if (seq.dim < min.size()) throw Error(ErrorCode::dimension_mismatch, "scaler: sequence has too few features");
  std::size_t clamped = 0;
  for (std::size_t t = 0; t < seq.steps; ++t) {
    for (std::size_t j = 0; j < min.size(); ++j) {
      const double range = max[j] - min[j];
      double v = range > 0.0 ? (seq.at(t, j) - min[j]) / range : 0.0;
      if (v < -1e-12 || v > 1.0 + 1e-12) ++clamped;
      seq.at(t, j) = std::clamp(v, 0.0, 1.0);
    }
  }
  return clamped;
}

SurrogateModel::SurrogateModel(SurrogateConfig config, std::vector<std::string> systems, FeatureScaler scaler,
                               bool time_embedding)
    : config_(config),
      layout_(ParameterLayout::build(config)),
      params_(layout_.total, 0.0),
      systems_(std::move(systems)),
      scaler_(std::move(scaler)),
      time_embedding_(time_embedding) {
  config_.validate();
  if (static_cast<int>(systems_.size()) != config_.n_systems) {
    throw Error(ErrorCode::dimension_mismatch,
                fmt::format("model: {} system ids for n_systems={}", systems_.size(), config_.n_systems));
  }
  const std::size_t expected = scaler_.size() + (time_embedding_ ? 2 : 0);
  if (!scaler_.min.empty() && expected != static_cast<std::size_t>(config_.input_dim)) {
    throw Error(ErrorCode::dimension_mismatch,
                fmt::format("model: scaler covers {} inputs but input_dim={}", expected, config_.input_dim));
  }
}

SurrogateModel SurrogateModel::initialize(SurrogateConfig config, std::vector<std::string> systems,
                                          FeatureScaler scaler, std::uint64_t seed, bool time_embedding) {
  SurrogateModel m(config, std::move(systems), std::move(scaler), time_embedding);
  RngStream rng(seed, 0x1A17);
  for (const auto& block : m.layout_.blocks) {
    if (block.cols == 1 && block.name.back() == 'b') continue;  // biases stay zero
    const double bound = 1.0 / std::sqrt(static_cast<double>(block.cols));
    for (std::size_t i = 0; i < block.size(); ++i) m.params_[block.offset + i] = rng.uniform(-bound, bound);
  }
  return m;
}

int SurrogateModel::system_index(const std::string& id) const {
  for (std::size_t i = 0; i < systems_.size(); ++i) {
    if (systems_[i] == id) return static_cast<int>(i);
  }
  throw Error(ErrorCode::unknown_system, fmt::format("system '{}' is not known to the model", id));
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

ConstMatMap mat(const double* base, const ParameterBlock& b) {
  return ConstMatMap(base + b.offset, static_cast<Eigen::Index>(b.rows), static_cast<Eigen::Index>(b.cols));
}
MatMap mat(double* base, const ParameterBlock& b) {
  return MatMap(base + b.offset, static_cast<Eigen::Index>(b.rows), static_cast<Eigen::Index>(b.cols));
}
ConstVecMap vec(const double* base, const ParameterBlock& b) {
  return ConstVecMap(base + b.offset, static_cast<Eigen::Index>(b.rows));
}
VecMap vec(double* base, const ParameterBlock& b) {
  return VecMap(base + b.offset, static_cast<Eigen::Index>(b.rows));
}

struct GruStep {
  VectorXd x, h_prev, z, r, c;
};

struct ForwardCache {
  std::vector<std::vector<GruStep>> layers;  // [layer][t]
  std::vector<std::vector<VectorXd>> gru_masks;  // [layer][t], empty when unused
  std::vector<VectorXd> mlp_inputs;               // input of each MLP layer
  std::vector<VectorXd> mlp_pre;                  // pre-activation of each MLP layer
  std::vector<VectorXd> mlp_masks;                // per hidden layer, empty when unused
  double output = 0.0;
};

VectorXd dropout_mask(RngStream& rng, Eigen::Index n, double rate) {
  VectorXd m(n);
  const double keep = 1.0 - rate;
  for (Eigen::Index i = 0; i < n; ++i) m[i] = rng.uniform() < keep ? 1.0 / keep : 0.0;
  return m;
}

void check_sequence(const SurrogateConfig& c, const Sequence& s) {
  if (s.steps < 1) throw Error(ErrorCode::dimension_mismatch, "sequence must have at least one step");
  if (s.dim != static_cast<std::size_t>(c.input_dim) || s.values.size() != s.steps * s.dim) {
    throw Error(ErrorCode::dimension_mismatch,
                fmt::format("sequence feature dimension {} differs from input_dim {}", s.dim, c.input_dim));
  }
}

/// Runs the whole network, caching what backward needs when cache != nullptr.
double forward(const SurrogateModel& model, const Sequence& seq, int system, RngStream* dropout_rng,
               ForwardCache* cache, VectorXd* embedding_out = nullptr) {
  const auto& c = model.config();
  const auto& layout = model.layout();
  const double* p = model.parameters().data();
  check_sequence(c, seq);
  if (system < 0 || system >= c.n_systems) {
    throw Error(ErrorCode::dimension_mismatch, fmt::format("system index {} outside [0, {})", system, c.n_systems));
  }
  const Eigen::Index h = c.gru_hidden;
  const auto steps = seq.steps;

  std::vector<VectorXd> inputs(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    inputs[t] = ConstVecMap(seq.row(t).data(), static_cast<Eigen::Index>(seq.dim));
  }
  if (cache) {
    cache->layers.assign(static_cast<std::size_t>(c.gru_layers), {});
    cache->gru_masks.assign(static_cast<std::size_t>(c.gru_layers), {});
  }

  VectorXd hidden;
  for (int l = 0; l < c.gru_layers; ++l) {
    const auto W = mat(p, layout.gru_w(l));
    const auto U = mat(p, layout.gru_u(l));
    const auto b = vec(p, layout.gru_b(l));
    hidden = VectorXd::Zero(h);
    std::vector<VectorXd> outputs(steps);
    for (std::size_t t = 0; t < steps; ++t) {
      const VectorXd gx = W * inputs[t] + b;
      const VectorXd gh = U.topRows(2 * h) * hidden;
      const VectorXd z = (gx.head(h) + gh.head(h)).unaryExpr(&sigmoid);
      const VectorXd r = (gx.segment(h, h) + gh.tail(h)).unaryExpr(&sigmoid);
      const VectorXd cand = (gx.tail(h) + U.bottomRows(h) * r.cwiseProduct(hidden)).array().tanh().matrix();
      VectorXd next = (1.0 - z.array()).matrix().cwiseProduct(hidden) + z.cwiseProduct(cand);
      if (cache) cache->layers[static_cast<std::size_t>(l)].push_back({inputs[t], hidden, z, r, cand});
      hidden = std::move(next);
      outputs[t] = hidden;
    }
    const bool last = l + 1 == c.gru_layers;
    if (!last && dropout_rng && c.gru_dropout > 0.0) {
      for (std::size_t t = 0; t < steps; ++t) {
        VectorXd m = dropout_mask(*dropout_rng, h, c.gru_dropout);
        outputs[t] = outputs[t].cwiseProduct(m);
        if (cache) cache->gru_masks[static_cast<std::size_t>(l)].push_back(std::move(m));
      }
    }
    inputs = std::move(outputs);
  }
  if (embedding_out) *embedding_out = hidden;

  VectorXd u(h + c.n_systems);
  u.head(h) = hidden;
  u.tail(c.n_systems).setZero();
  u[h + system] = 1.0;
  if (cache) {
    cache->mlp_inputs.clear();
    cache->mlp_pre.clear();
    cache->mlp_masks.assign(static_cast<std::size_t>(c.mlp_layers), {});
  }
  double out = 0.0;
  for (int j = 0; j < c.mlp_layers; ++j) {
    const auto W = mat(p, layout.mlp_w(c.gru_layers, j));
    const auto b = vec(p, layout.mlp_b(c.gru_layers, j));
    VectorXd a = W * u + b;
    if (cache) {
      cache->mlp_inputs.push_back(u);
      cache->mlp_pre.push_back(a);
    }
    if (j + 1 == c.mlp_layers) {
      out = sigmoid(a[0]);
    } else {
      u = a.cwiseMax(0.0);
      if (dropout_rng && c.mlp_dropout > 0.0) {
        VectorXd m = dropout_mask(*dropout_rng, u.size(), c.mlp_dropout);
        u = u.cwiseProduct(m);
        if (cache) cache->mlp_masks[static_cast<std::size_t>(j)] = std::move(m);
      }
    }
  }
  if (cache) cache->output = out;
  return out;
}

/// Accumulates d(loss)/d(params) for one sample given d(loss)/d(output).
void backward_sample(const SurrogateModel& model, const ForwardCache& cache, double d_out, double* g) {
  const auto& c = model.config();
  const auto& layout = model.layout();
  const double* p = model.parameters().data();
  const Eigen::Index h = c.gru_hidden;

  VectorXd da(1);
  da[0] = d_out * cache.output * (1.0 - cache.output);
  for (int j = c.mlp_layers - 1; j >= 0; --j) {
    const auto& wb = layout.mlp_w(c.gru_layers, j);
    mat(g, wb).noalias() += da * cache.mlp_inputs[static_cast<std::size_t>(j)].transpose();
    vec(g, layout.mlp_b(c.gru_layers, j)) += da;
    VectorXd du = mat(p, wb).transpose() * da;
    if (j == 0) {
      da = du;
      break;
    }
    const auto& mask = cache.mlp_masks[static_cast<std::size_t>(j - 1)];
    if (mask.size() > 0) du = du.cwiseProduct(mask);
    const auto& pre = cache.mlp_pre[static_cast<std::size_t>(j - 1)];
    da = du.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
  }

  const std::size_t steps = cache.layers.front().size();
  // Gradient w.r.t. each timestep output of the current layer.
  std::vector<VectorXd> d_outputs(steps, VectorXd::Zero(h));
  d_outputs[steps - 1] = da.head(h);
  for (int l = c.gru_layers - 1; l >= 0; --l) {
    const auto& steps_cache = cache.layers[static_cast<std::size_t>(l)];
    const auto& wb = layout.gru_w(l);
    const auto& ub = layout.gru_u(l);
    const auto W = mat(p, wb);
    const auto U = mat(p, ub);
    auto gW = mat(g, wb);
    auto gU = mat(g, ub);
    auto gb = vec(g, layout.gru_b(l));
    const Eigen::Index in = static_cast<Eigen::Index>(wb.cols);
    std::vector<VectorXd> d_inputs(steps, VectorXd::Zero(in));
    VectorXd dh = VectorXd::Zero(h);
    VectorXd dgate(3 * h);
    for (std::size_t t = steps; t-- > 0;) {
      const GruStep& s = steps_cache[t];
      dh += d_outputs[t];
      const VectorXd dc = dh.cwiseProduct(s.z);
      const VectorXd dz = dh.cwiseProduct(s.c - s.h_prev);
      VectorXd dh_prev = dh.cwiseProduct((1.0 - s.z.array()).matrix());
      const VectorXd dac = dc.cwiseProduct((1.0 - s.c.array().square()).matrix());
      const VectorXd rh = s.r.cwiseProduct(s.h_prev);
      const VectorXd drh = U.bottomRows(h).transpose() * dac;
      const VectorXd dr = drh.cwiseProduct(s.h_prev);
      dh_prev += drh.cwiseProduct(s.r);
      dgate.head(h) = dz.cwiseProduct(s.z.cwiseProduct((1.0 - s.z.array()).matrix()));
      dgate.segment(h, h) = dr.cwiseProduct(s.r.cwiseProduct((1.0 - s.r.array()).matrix()));
      dgate.tail(h) = dac;

      gW.noalias() += dgate * s.x.transpose();
      gb += dgate;
      gU.topRows(2 * h).noalias() += dgate.head(2 * h) * s.h_prev.transpose();
      gU.bottomRows(h).noalias() += dac * rh.transpose();
      dh_prev.noalias() += U.topRows(2 * h).transpose() * dgate.head(2 * h);
      if (l > 0) d_inputs[t].noalias() = W.transpose() * dgate;
      dh = std::move(dh_prev);
    }
    if (l > 0) {
      const auto& masks = cache.gru_masks[static_cast<std::size_t>(l - 1)];
      for (std::size_t t = 0; t < steps; ++t) {
        d_outputs[t] = masks.empty() ? d_inputs[t] : d_inputs[t].cwiseProduct(masks[t]);
      }
    }
  }
}

}  // namespace

std::vector<double> gru_forward(const SurrogateModel& model, const Sequence& sequence) {
  VectorXd embedding;
  forward(model, sequence, 0, nullptr, nullptr, &embedding);
  return {embedding.data(), embedding.data() + embedding.size()};
}

double decode(const SurrogateModel& model, std::span<const double> embedding, int system) {
  const auto& c = model.config();
  if (embedding.size() != static_cast<std::size_t>(c.gru_hidden)) {
    throw Error(ErrorCode::dimension_mismatch, "decode: embedding size differs from gru_hidden");
  }
  if (system < 0 || system >= c.n_systems) throw Error(ErrorCode::dimension_mismatch, "decode: system index out of range");
  const double* p = model.parameters().data();
  const Eigen::Index h = c.gru_hidden;
  VectorXd u(h + c.n_systems);
  u.head(h) = ConstVecMap(embedding.data(), h);
  u.tail(c.n_systems).setZero();
  u[h + system] = 1.0;
  for (int j = 0; j < c.mlp_layers; ++j) {
    VectorXd a = mat(p, model.layout().mlp_w(c.gru_layers, j)) * u + vec(p, model.layout().mlp_b(c.gru_layers, j));
    if (j + 1 == c.mlp_layers) return sigmoid(a[0]);
    u = a.cwiseMax(0.0);
  }
  return 0.5;
}

double mae_loss(std::span<const double> predictions, std::span<const double> labels) {
  if (predictions.size() != labels.size() || predictions.empty()) {
    throw Error(ErrorCode::length_mismatch,
                fmt::format("mae: {} predictions for {} labels", predictions.size(), labels.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) s += std::abs(predictions[i] - labels[i]);
  return s / static_cast<double>(predictions.size());
}

GradientResult backward(const SurrogateModel& model, std::span<const TrainingSample> batch, const DropoutSpec& dropout,
                        int workers) {
  if (batch.empty()) throw Error(ErrorCode::empty_input, "backward: empty batch");
  for (const auto& block : model.layout().blocks) {
    for (std::size_t i = 0; i < block.size(); ++i) {
      if (!std::isfinite(model.parameters()[block.offset + i])) {
        throw Error(ErrorCode::numerical_failure, fmt::format("non-finite parameter in {}", block.name));
      }
    }
  }
  const std::size_t n_params = model.parameters().size();
  const double scale = 1.0 / static_cast<double>(batch.size());

  // Fixed-size chunks, reduced in order.
  constexpr std::size_t kChunk = 8;
  const std::size_t n_chunks = (batch.size() + kChunk - 1) / kChunk;
  std::vector<std::vector<double>> chunk_grads(n_chunks);
  std::vector<double> predictions(batch.size());
  std::vector<std::exception_ptr> errors(n_chunks);

  auto run_chunk = [&](std::size_t chunk) {
    try {
      auto& g = chunk_grads[chunk];
      g.assign(n_params, 0.0);
      ForwardCache cache;
      const std::size_t end = std::min(batch.size(), (chunk + 1) * kChunk);
      for (std::size_t i = chunk * kChunk; i < end; ++i) {
        const auto& s = batch[i];
        RngStream rng = RngStream(dropout.seed, dropout.stream).derive(0xD7, i);
        const double y = forward(model, s.sequence, s.system, dropout.enabled ? &rng : nullptr, &cache);
        predictions[i] = y;
        const double diff = y - s.label;
        const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        if (sign != 0.0) backward_sample(model, cache, sign * scale, g.data());
      }
    } catch (...) {
      errors[chunk] = std::current_exception();
    }
  };

  const auto n_workers = static_cast<std::size_t>(std::max(1, workers));
  if (n_workers == 1 || n_chunks == 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) run_chunk(c);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(n_workers, n_chunks); ++w) {
      pool.emplace_back([&, w]() {
        for (std::size_t c = w; c < n_chunks; c += n_workers) run_chunk(c);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  GradientResult result;
  result.grad.assign(n_params, 0.0);
  for (const auto& g : chunk_grads) {
    for (std::size_t i = 0; i < n_params; ++i) result.grad[i] += g[i];
  }
  for (const auto& block : model.layout().blocks) {
    for (std::size_t i = 0; i < block.size(); ++i) {
      if (!std::isfinite(result.grad[block.offset + i])) {
        throw Error(ErrorCode::numerical_failure, fmt::format("non-finite gradient in {}", block.name));
      }
    }
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!std::isfinite(predictions[i])) throw Error(ErrorCode::numerical_failure, "non-finite prediction");
    loss += std::abs(predictions[i] - batch[i].label);
  }
  result.loss = loss * scale;
  result.predictions = std::move(predictions);
  return result;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr,
               double weight_decay, long t) {
  if (t < 1) throw Error(ErrorCode::invalid_argument, "adam: step index must be >= 1");
  if (params.size() != grads.size()) throw Error(ErrorCode::length_mismatch, "adam: gradient size mismatch");
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i] -= lr * weight_decay * params[i];
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grads[i];
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
  state.step = t;
}

double predict_normalized(const SurrogateModel& model, const Sequence& sequence, int system) {
  return forward(model, sequence, system, nullptr, nullptr);
}

double predict(const SurrogateModel& model, Sequence raw, int system, PredictStats* stats) {
  const std::size_t clamped = model.scaler().transform(raw);
  if (stats) stats->clamped_values += clamped;
  return predict_normalized(model, raw, system);
}

std::vector<double> predict_batch(const SurrogateModel& model, std::span<const Sequence> raw_sequences, int system,
                                  PredictStats* stats) {
  std::vector<double> out;
  out.reserve(raw_sequences.size());
  for (const auto& s : raw_sequences) out.push_back(predict(model, s, system, stats));
  return out;
}

}  // namespace gridres
