#include "gridres/training.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <fmt/core.h>

#include "gridres/error.hpp"
#include "gridres/rng.hpp"

namespace gridres {

namespace {
enum Purpose : std::uint64_t { kFold = 31, kStratify = 32, kEpochShuffle = 33, kDropout = 34, kInit = 35 };
}

std::vector<Split> kfold_split(std::size_t n, int k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::split_infeasible, "kfold: k must be >= 2");
  if (static_cast<std::size_t>(k) > n) {
    throw Error(ErrorCode::split_infeasible, fmt::format("kfold: k={} exceeds {} samples", k, n));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  RngStream(seed, kFold).shuffle(std::span<std::size_t>(order));

  const auto folds = static_cast<std::size_t>(k);
  std::vector<std::vector<std::size_t>> parts(folds);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t size = n / folds + (f < n % folds ? 1 : 0);
    parts[f].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                    order.begin() + static_cast<std::ptrdiff_t>(pos + size));
    pos += size;
  }
  std::vector<Split> out(folds);
  for (std::size_t f = 0; f < folds; ++f) {
    out[f].val = parts[f];
    for (std::size_t g = 0; g < folds; ++g) {
      if (g != f) out[f].train.insert(out[f].train.end(), parts[g].begin(), parts[g].end());
    }
    std::sort(out[f].train.begin(), out[f].train.end());
    std::sort(out[f].val.begin(), out[f].val.end());
  }
  return out;
}

Split stratified_split(std::span<const int> groups, std::array<double, 3> fractions, std::uint64_t seed) {
  for (double f : fractions) {
    if (!(f >= 0.0)) throw Error(ErrorCode::invalid_argument, "stratified split: fractions must be >= 0");
  }
  if (std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9) {
    throw Error(ErrorCode::invalid_argument, "stratified split: fractions must sum to 1");
  }
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < groups.size(); ++i) members[groups[i]].push_back(i);
  if (members.empty()) throw Error(ErrorCode::split_infeasible, "stratified split: no samples");

  Split split;
  for (auto& [group, idx] : members) {
    const std::size_t n = idx.size();
    if (n < 3) {
      throw Error(ErrorCode::undersized_group,
                  fmt::format("stratified split: group {} has {} samples, need >= 3", group, n));
    }
    RngStream(seed, kStratify).derive(static_cast<std::uint64_t>(static_cast<std::int64_t>(group)))
        .shuffle(std::span<std::size_t>(idx));
    const auto n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(fractions[1] * n)));
    const auto n_test = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(fractions[2] * n)));
    if (n_val + n_test >= n) {
      throw Error(ErrorCode::undersized_group,
                  fmt::format("stratified split: group {} leaves no training samples", group));
    }
    const std::size_t n_train = n - n_val - n_test;
    split.train.insert(split.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.val.insert(split.val.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train),
                     idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    split.test.insert(split.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), idx.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

double evaluate_mae(const SurrogateModel& model, std::span<const TrainingSample> samples) {
  if (samples.empty()) throw Error(ErrorCode::split_infeasible, "evaluation set is empty");
  double s = 0.0;
  for (const auto& sample : samples) {
    s += std::abs(predict_normalized(model, sample.sequence, sample.system) - sample.label);
  }
  return s / static_cast<double>(samples.size());
}

TrainResult train(std::span<const TrainingSample> train_set, std::span<const TrainingSample> val_set,
                  SurrogateModel model, const TrainOptions& options) {
  if (train_set.empty()) throw Error(ErrorCode::split_infeasible, "training set is empty");
  if (val_set.empty()) throw Error(ErrorCode::split_infeasible, "validation set is empty");
  const SurrogateConfig& config = model.config();
  const bool dropout = config.gru_dropout > 0.0 || config.mlp_dropout > 0.0;

  TrainResult result;
  result.initial_val = evaluate_mae(model, val_set);
  result.best_val = result.initial_val;
  result.best = model;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<TrainingSample> batch;
  AdamState adam;
  long t = 0;
  const auto batch_size = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    RngStream(options.seed, kEpochShuffle).derive(static_cast<std::uint64_t>(epoch))
        .shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(train_set[order[i]]);
      ++t;
      const DropoutSpec spec{dropout, options.seed, (static_cast<std::uint64_t>(kDropout) << 48) ^ static_cast<std::uint64_t>(t)};
      const GradientResult g = backward(model, batch, spec, options.workers);
      loss_sum += g.loss * static_cast<double>(batch.size());
      adam_step(model.parameters(), g.grad, adam, config.learning_rate, config.weight_decay, t);
    }
    const double train_mae = loss_sum / static_cast<double>(train_set.size());
    const double val_mae = evaluate_mae(model, val_set);
    result.train_loss.push_back(train_mae);
    result.val_loss.push_back(val_mae);
    if (val_mae < result.best_val) {
      result.best_val = val_mae;
      result.best_epoch = epoch;
      result.best = model;
    }
    if (options.progress) options.progress(epoch, config.epochs, train_mae, val_mae);
  }
  return result;
}

std::vector<SurrogateConfig> GridSearchSpace::expand(const SurrogateConfig& base) const {
  std::vector<SurrogateConfig> out{base};
  auto axis = [&out](const auto& values, auto setter) {
    if (values.empty()) return;
    std::vector<SurrogateConfig> next;
    for (const auto& c : out) {
      for (const auto& v : values) {
        SurrogateConfig copy = c;
        setter(copy, v);
        next.push_back(copy);
      }
    }
    out = std::move(next);
  };
  axis(gru_hidden, [](SurrogateConfig& c, int v) { c.gru_hidden = v; });
  axis(gru_layers, [](SurrogateConfig& c, int v) { c.gru_layers = v; });
  axis(mlp_layers, [](SurrogateConfig& c, int v) { c.mlp_layers = v; });
  axis(learning_rate, [](SurrogateConfig& c, double v) { c.learning_rate = v; });
  axis(weight_decay, [](SurrogateConfig& c, double v) { c.weight_decay = v; });
  axis(mlp_dropout, [](SurrogateConfig& c, double v) { c.mlp_dropout = v; });
  return out;
}

GridSearchResult grid_search(std::span<const TrainingSample> train_set, std::span<const TrainingSample> val_set,
                             const SurrogateModel& prototype, const GridSearchSpace& space,
                             const TrainOptions& options) {
  GridSearchResult result;
  for (const auto& config : space.expand(prototype.config())) {
    config.validate();
    auto model = SurrogateModel::initialize(config, prototype.systems(), prototype.scaler(),
                                            RngStream(options.seed, kInit).next_u64(), prototype.time_embedding());
    TrainOptions quiet = options;
    quiet.progress = nullptr;
    const auto r = train(train_set, val_set, std::move(model), quiet);
    result.trials.push_back({config, r.best_val});
    if (r.best_val < result.trials[result.best].best_val) result.best = result.trials.size() - 1;
  }
  return result;
}

}  // namespace gridres
