#pragma once

#include <array>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gridres/numerics.hpp"
#include "gridres/rng.hpp"
#include "gridres/topology.hpp"

namespace gridres {

inline constexpr std::size_t kAnchorCount = 16;

struct LogNormalParams {
  double mu = 0.0;     ///< log m/s
  double sigma = 1.0;  ///< log m/s

  double median() const;
  bool operator==(const LogNormalParams&) const = default;
};

/// Wind speed distributions. The defaults are illustrative, not fitted.
struct WindDistributions {
  LogNormalParams gust{3.2, 0.25};
  LogNormalParams sustained{2.1, 0.3};

  void validate() const;
  bool operator==(const WindDistributions&) const = default;
};

struct HazardConfig {
  IntRange storm_hours{4, 12};
  IntRange gust_count{1, 3};
  double gust_area_probability = 0.3;
  WindDistributions winds;
  double patch_size_km = 1.0;
  double idw_power = 2.0;

  void validate() const;
  bool operator==(const HazardConfig&) const = default;
};

struct GustSchedule {
  int storm_hours = 0;
  std::vector<int> gust_hours;  ///< sorted, each in [0, storm_hours)
  std::vector<int> gust_areas;  ///< sorted service-area ids

  bool is_gust_hour(int hour) const;
  bool is_gust_area(int area) const;
  bool has_gusts() const noexcept { return !gust_hours.empty(); }
};

/// Patch-constant wind speeds (m/s) in row-major order; row 0 starts at origin.y.
struct WindField {
  int rows = 1;
  int cols = 1;
  double patch_size_km = 1.0;
  Point2D origin;
  std::vector<double> speeds;

  double patch(int row, int col) const { return speeds[static_cast<std::size_t>(row * cols + col)]; }
  Point2D patch_center(int row, int col) const;
};

GustSchedule make_schedule(const HazardConfig& config, int n_areas, RngStream rng);

std::vector<WeightedSample> sample_sparse_field(const GridTopology& topology, const GustSchedule& schedule, int hour,
                                                const WindDistributions& dists, RngStream rng);

/// Every patch takes the IDW estimate at its centre. The grid covers
/// [lo, hi] with ceil(extent / patch_size) patches per axis (at least one).
WindField build_wind_field(std::span<const WeightedSample> samples, double patch_size_km, Point2D lo, Point2D hi,
                           double idw_power = 2.0);

/// Value of the patch containing the point; outside points clamp to the
/// nearest boundary patch.
double wind_at(const WindField& field, Point2D point);

/// Sixteen resampling anchors per service area: K-Means centroids of the
/// area's line midpoints, padded cyclically when the area has fewer lines.
using AnchorSet = std::vector<std::array<Point2D, kAnchorCount>>;
AnchorSet compute_anchors(const GridTopology& topology, RngStream rng);

/// [area][hour] -> 16 anchor speeds.
using WeatherRepresentation = std::vector<std::vector<std::array<double, kAnchorCount>>>;
WeatherRepresentation weather_representation(std::span<const WindField> fields, const AnchorSet& anchors);

struct HazardScenario {
  GustSchedule schedule;
  std::vector<WindField> fields;  ///< one per storm hour

  nlohmann::json to_json() const;
  static HazardScenario from_json(const nlohmann::json& doc);
};

HazardScenario generate_scenario(const GridTopology& topology, const HazardConfig& config, RngStream rng);

}  // namespace gridres
