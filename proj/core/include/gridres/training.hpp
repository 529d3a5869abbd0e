#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "gridres/surrogate.hpp"

namespace gridres {

/// Index sets into a sample list. test is empty for k-fold partitions.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Shuffled partition of [0, n) into k near-equal folds; fold i is the
/// validation set of partition i.
std::vector<Split> kfold_split(std::size_t n, int k, std::uint64_t seed);

/// Per-group shuffled split. Validation and test sizes round to nearest
/// (at least one each); training takes the remainder.
Split stratified_split(std::span<const int> groups, std::array<double, 3> fractions, std::uint64_t seed);

struct TrainOptions {
  std::uint64_t seed = 0;
  int workers = 1;
  /// Called after every epoch with (epoch, epochs, train MAE, val MAE).
  std::function<void(int, int, double, double)> progress;
};

struct TrainResult {
  SurrogateModel best;
  int best_epoch = 0;  ///< 1-based epoch of the saved snapshot; 0 = initial weights
  double best_val = 0.0;
  double initial_val = 0.0;
  std::vector<double> train_loss;  ///< per epoch, dropout on
  std::vector<double> val_loss;    ///< per epoch, dropout off
};

/// MAE of deterministic predictions over normalized samples.
double evaluate_mae(const SurrogateModel& model, std::span<const TrainingSample> samples);

/// Mini-batch Adam. Batches are reshuffled every epoch; the snapshot with the
/// lowest validation MAE is returned.
TrainResult train(std::span<const TrainingSample> train_set, std::span<const TrainingSample> val_set,
                  SurrogateModel model, const TrainOptions& options = {});

struct GridSearchSpace {
  std::vector<int> gru_hidden;
  std::vector<int> gru_layers;
  std::vector<int> mlp_layers;
  std::vector<double> learning_rate;
  std::vector<double> weight_decay;
  std::vector<double> mlp_dropout;

  /// Cartesian product over base; empty axes keep the base value.
  std::vector<SurrogateConfig> expand(const SurrogateConfig& base) const;
};

struct GridTrial {
  SurrogateConfig config;
  double best_val = 0.0;
};

struct GridSearchResult {
  std::vector<GridTrial> trials;
  std::size_t best = 0;
};

GridSearchResult grid_search(std::span<const TrainingSample> train_set, std::span<const TrainingSample> val_set,
                             const SurrogateModel& prototype, const GridSearchSpace& space,
                             const TrainOptions& options = {});

}  // namespace gridres
