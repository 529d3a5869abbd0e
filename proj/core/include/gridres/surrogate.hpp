#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gridres/rng.hpp"

namespace gridres {

struct SurrogateConfig {
  int gru_hidden = 128;
  int gru_layers = 1;
  int mlp_layers = 2;
  /// Width of MLP hidden layers; 0 means gru_hidden.
  int mlp_hidden = 0;
  double gru_dropout = 0.0;
  double mlp_dropout = 0.2;
  double learning_rate = 0.00623;
  double weight_decay = 0.00058;
  int epochs = 500;
  int batch_size = 32;
  int input_dim = 18;
  int n_systems = 1;

  /// County-scale preset: hidden 128, 1 GRU layer, 2 MLP layers.
  static SurrogateConfig case_a(int input_dim, int n_systems);
  /// Service-area preset: hidden 16, 4 GRU layers, 3 MLP layers.
  static SurrogateConfig case_b(int input_dim, int n_systems);

  int decoder_width() const noexcept { return mlp_hidden > 0 ? mlp_hidden : gru_hidden; }
  void validate() const;
  bool operator==(const SurrogateConfig&) const = default;
};

/// Row-major (steps x dim) feature matrix.
struct Sequence {
  std::size_t steps = 0;
  std::size_t dim = 0;
  std::vector<double> values;

  Sequence() = default;
  Sequence(std::size_t steps_, std::size_t dim_) : steps(steps_), dim(dim_), values(steps_ * dim_, 0.0) {}

  std::span<double> row(std::size_t t) { return {values.data() + t * dim, dim}; }
  std::span<const double> row(std::size_t t) const { return {values.data() + t * dim, dim}; }
  double& at(std::size_t t, std::size_t j) { return values[t * dim + j]; }
  double at(std::size_t t, std::size_t j) const { return values[t * dim + j]; }
};

/// A normalized model input and its label.
struct TrainingSample {
  Sequence sequence;
  int system = 0;  ///< one-hot index
  double label = 0.0;
};

/// Named contiguous slice of the flat parameter vector.
struct ParameterBlock {
  std::string name;
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const noexcept { return rows * cols; }
};

/// Flat parameter layout. Per GRU layer: W (3H x in), U (3H x H), b (3H),
/// gate rows ordered update, reset, candidate. Per MLP layer: W (out x in),
/// b (out). Matrices are stored column-major.
struct ParameterLayout {
  std::vector<ParameterBlock> blocks;
  std::size_t total = 0;

  static ParameterLayout build(const SurrogateConfig& config);
  const ParameterBlock& gru_w(int layer) const { return blocks[static_cast<std::size_t>(3 * layer)]; }
  const ParameterBlock& gru_u(int layer) const { return blocks[static_cast<std::size_t>(3 * layer + 1)]; }
  const ParameterBlock& gru_b(int layer) const { return blocks[static_cast<std::size_t>(3 * layer + 2)]; }
  const ParameterBlock& mlp_w(int gru_layers, int layer) const {
    return blocks[static_cast<std::size_t>(3 * gru_layers + 2 * layer)];
  }
  const ParameterBlock& mlp_b(int gru_layers, int layer) const {
    return blocks[static_cast<std::size_t>(3 * gru_layers + 2 * layer + 1)];
  }
};

/// Per-feature min-max statistics of the training inputs.
struct FeatureScaler {
  std::vector<double> min;
  std::vector<double> max;

  static FeatureScaler fit(std::span<const Sequence* const> sequences);
  std::size_t size() const noexcept { return min.size(); }
  /// Returns how many values fell outside [0, 1] and were clamped.
  std::size_t transform(Sequence& sequence) const;
};

class SurrogateModel {
 public:
  SurrogateModel() = default;
  SurrogateModel(SurrogateConfig config, std::vector<std::string> systems, FeatureScaler scaler,
                 bool time_embedding = false);

  /// Uniform +-1/sqrt(fan_in) weights, zero biases.
  static SurrogateModel initialize(SurrogateConfig config, std::vector<std::string> systems, FeatureScaler scaler,
                                   std::uint64_t seed, bool time_embedding = false);

  const SurrogateConfig& config() const noexcept { return config_; }
  const ParameterLayout& layout() const noexcept { return layout_; }
  std::span<double> parameters() noexcept { return params_; }
  std::span<const double> parameters() const noexcept { return params_; }
  const std::vector<std::string>& systems() const noexcept { return systems_; }
  int system_index(const std::string& id) const;  ///< throws unknown_system
  const FeatureScaler& scaler() const noexcept { return scaler_; }
  bool time_embedding() const noexcept { return time_embedding_; }

 private:
  SurrogateConfig config_;
  ParameterLayout layout_;
  std::vector<double> params_;
  std::vector<std::string> systems_;
  FeatureScaler scaler_;
  bool time_embedding_ = false;
};

/// Final top-layer hidden state for a normalized sequence (dropout off).
std::vector<double> gru_forward(const SurrogateModel& model, const Sequence& sequence);

/// MLP over [embedding, one-hot(system)] with ReLU hidden layers and a
/// sigmoid output.
double decode(const SurrogateModel& model, std::span<const double> embedding, int system);

double mae_loss(std::span<const double> predictions, std::span<const double> labels);

struct DropoutSpec {
  bool enabled = false;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

struct GradientResult {
  std::vector<double> grad;  ///< layout of model.parameters()
  double loss = 0.0;         ///< batch MAE
  std::vector<double> predictions;
};

/// Exact gradient of the batch MAE (subgradient 0 at the kink). With dropout
/// enabled, sample i of the batch uses masks from stream (seed, stream).derive(i).
GradientResult backward(const SurrogateModel& model, std::span<const TrainingSample> batch,
                        const DropoutSpec& dropout = {}, int workers = 1);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
};

/// Adam (beta1 0.9, beta2 0.999, eps 1e-8) with decoupled weight decay
/// theta -= lr * wd * theta applied before the moment update; t is 1-based.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr,
               double weight_decay, long t);

/// Forward pass on a normalized sample with dropout off.
double predict_normalized(const SurrogateModel& model, const Sequence& sequence, int system);

struct PredictStats {
  std::size_t clamped_values = 0;
};

/// Normalizes raw features with the model's statistics, clamping out-of-range
/// features to [0, 1], then predicts.
double predict(const SurrogateModel& model, Sequence raw_sequence, int system, PredictStats* stats = nullptr);

std::vector<double> predict_batch(const SurrogateModel& model, std::span<const Sequence> raw_sequences, int system,
                                  PredictStats* stats = nullptr);

}  // namespace gridres
