#pragma once

#include <array>
#include <cstdint>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "gridres/ingest.hpp"
#include "gridres/metrics.hpp"
#include "gridres/planning.hpp"
#include "gridres/simulation.hpp"
#include "gridres/surrogate.hpp"
#include "gridres/topology.hpp"
#include "gridres/training.hpp"

namespace gridres {

inline constexpr int kConfigSchemaVersion = 1;

enum class TrainProtocol { stratified, kfold };

struct TrainingSettings {
  TrainProtocol protocol = TrainProtocol::stratified;
  int folds = 5;
  std::array<double, 3> fractions{0.6, 0.2, 0.2};
  bool time_embedding = false;
  GridSearchSpace grid;

  bool operator==(const TrainingSettings& o) const;
};

struct MetricSettings {
  double lambda = 1.0 / 3.0;
  WeightScheme scheme = PlainSum{};
  int permutation_iterations = 10'000;
};

struct PlanningSettings {
  double pu = 600.0;
  double target = 0.9;
  PlanningMode mode = PlanningMode::analytic;
};

struct SimulationSettings {
  int episodes = 500;
  EpisodeSettings episode;
};

/// Everything a gridres command can be configured with.
struct RunConfig {
  int schema_version = kConfigSchemaVersion;
  std::uint64_t seed = 0;
  int workers = 1;
  TopologyGenConfig topology;
  SimulationSettings simulation;
  SurrogateConfig surrogate;
  TrainingSettings training;
  MetricSettings metrics;
  PlanningSettings planning;
  ingest::IngestOptions ingest;

  /// Runs every child validation; failures become config_error with the
  /// dotted path of the offending section.
  void validate() const;
  bool operator==(const RunConfig& o) const;
};

nlohmann::json to_json(const RunConfig& config);
/// Missing keys take defaults; unknown keys and bad values are config errors
/// naming the field path.
RunConfig run_config_from_json(const nlohmann::json& doc);

RunConfig load_run_config(const std::string& path);
std::string dump_run_config(const RunConfig& config);

nlohmann::json scheme_to_json(const WeightScheme& scheme);

}  // namespace gridres
