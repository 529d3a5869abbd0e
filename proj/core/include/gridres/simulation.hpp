#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gridres/fragility.hpp"
#include "gridres/hazard.hpp"
#include "gridres/recovery.hpp"
#include "gridres/topology.hpp"

namespace gridres {

/// Which window the per-area trapezoid integrates over.
enum class WindowMode {
  event,   ///< storm start to storm end
  outage,  ///< storm start to the area's full restoration
};

const char* to_string(WindowMode mode) noexcept;
WindowMode window_mode_from_string(const std::string& text);

struct EpisodeSettings {
  HazardConfig hazard;
  FragilityParams fragility;
  RecoveryConfig recovery;
  WindowMode window = WindowMode::event;

  void validate() const;
  bool operator==(const EpisodeSettings&) const = default;
};

struct LineOutage {
  int line_id = 0;
  int break_hour = 0;
  int repair_hour = 0;  ///< hour boundary at which service returned
};

struct EpisodeTrace {
  std::uint64_t episode_id = 0;
  GustSchedule schedule;
  /// served[hour][area], recorded after each hour's failures or repairs.
  std::vector<std::vector<double>> served;
  std::vector<LineOutage> outages;
  std::vector<double> rs_event;   ///< per area
  std::vector<double> rs_outage;  ///< per area
  WeatherRepresentation weather;  ///< [area][storm hour][anchor]

  int storm_hours() const noexcept { return schedule.storm_hours; }
  double rs(int area, WindowMode mode) const {
    return mode == WindowMode::event ? rs_event.at(static_cast<std::size_t>(area))
                                     : rs_outage.at(static_cast<std::size_t>(area));
  }
  nlohmann::json to_json() const;
};

/// Topology-level data shared by every episode.
struct SimulationContext {
  const GridTopology* topology = nullptr;
  AnchorSet anchors;
  std::vector<Point2D> team_locations;
};

SimulationContext make_context(const GridTopology& topology, const EpisodeSettings& settings, std::uint64_t seed);

/// Hazard stage then restoration stage; episode randomness comes only from
/// the stream (seed, episode_id).
EpisodeTrace run_episode(const SimulationContext& context, const EpisodeSettings& settings, std::uint64_t seed,
                         std::uint64_t episode_id);

struct SimSample {
  int area_id = 0;
  std::uint64_t episode_id = 0;
  std::vector<std::array<double, kAnchorCount>> weather;  ///< per storm hour
  double rs = 0.0;
};

/// Training corpus: gust-area samples only, in (episode, area) order.
struct SimDataset {
  std::vector<SimSample> samples;
};

struct AreaSummary {
  int area_id = 0;
  std::int64_t customers = 0;
  int episodes = 0;
  int gust_samples = 0;
  double mean_rs_event = 0.0;
  double mean_rs_outage = 0.0;
  double gust_mean_rs_event = 0.0;   ///< NaN without gust samples
  double gust_mean_rs_outage = 0.0;  ///< NaN without gust samples
  double gust_stderr_event = 0.0;
};

struct MonteCarloResult {
  SimDataset dataset;
  std::vector<AreaSummary> areas;
  std::vector<EpisodeTrace> traces;  ///< kept only when requested
};

struct MonteCarloOptions {
  int n_episodes = 1;
  std::uint64_t seed = 0;
  std::uint64_t first_episode = 0;
  int workers = 1;
  bool keep_traces = false;
  std::function<void(int done, int total)> progress;
};

MonteCarloResult run_monte_carlo(const GridTopology& topology, const EpisodeSettings& settings,
                                 const MonteCarloOptions& options);

void write_weather_csv(std::ostream& out, const SimDataset& dataset);
void write_labels_csv(std::ostream& out, const SimDataset& dataset);
void write_area_summary_csv(std::ostream& out, const std::vector<AreaSummary>& areas);

}  // namespace gridres
