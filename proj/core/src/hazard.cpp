#include "gridres/hazard.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "gridres/error.hpp"

namespace gridres {

using nlohmann::json;

namespace {
enum Purpose : std::uint64_t { kSchedule = 11, kSparse = 12, kAnchors = 13 };
}

double LogNormalParams::median() const { return std::exp(mu); }

void WindDistributions::validate() const {
  if (!(gust.sigma > 0.0) || !(sustained.sigma > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "wind distributions: sigma must be > 0");
  }
  if (!(gust.mu > sustained.mu)) {
    throw Error(ErrorCode::invalid_argument, "wind distributions: gust median must exceed sustained median");
  }
}

void HazardConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::invalid_argument, fmt::format("hazard config: {}", what));
  };
  require(storm_hours.lo >= 1 && storm_hours.hi >= storm_hours.lo, "storm_hours must be a range >= 1");
  require(gust_count.lo >= 0 && gust_count.hi >= gust_count.lo, "gust_count must be a range >= 0");
  require(gust_area_probability >= 0.0 && gust_area_probability <= 1.0, "gust_area_probability must lie in [0, 1]");
  require(patch_size_km > 0.0, "patch_size_km must be > 0");
  require(idw_power > 0.0, "idw_power must be > 0");
  winds.validate();
}

bool GustSchedule::is_gust_hour(int hour) const {
  return std::binary_search(gust_hours.begin(), gust_hours.end(), hour);
}

bool GustSchedule::is_gust_area(int area) const {
  return std::binary_search(gust_areas.begin(), gust_areas.end(), area);
}

Point2D WindField::patch_center(int row, int col) const {
  return {origin.x + (col + 0.5) * patch_size_km, origin.y + (row + 0.5) * patch_size_km};
}

GustSchedule make_schedule(const HazardConfig& config, int n_areas, RngStream rng) {
  config.validate();
  GustSchedule s;
  s.storm_hours = static_cast<int>(rng.uniform_int(config.storm_hours.lo, config.storm_hours.hi));
  const int gusts = std::min(s.storm_hours, static_cast<int>(rng.uniform_int(config.gust_count.lo, config.gust_count.hi)));
  std::vector<int> hours(static_cast<std::size_t>(s.storm_hours));
  std::iota(hours.begin(), hours.end(), 0);
  rng.shuffle(std::span<int>(hours));
  s.gust_hours.assign(hours.begin(), hours.begin() + gusts);
  std::sort(s.gust_hours.begin(), s.gust_hours.end());
  if (gusts > 0) {
    for (int a = 0; a < n_areas; ++a) {
      if (rng.bernoulli(config.gust_area_probability)) s.gust_areas.push_back(a);
    }
    if (s.gust_areas.empty() && n_areas > 0) {
      s.gust_areas.push_back(static_cast<int>(rng.uniform_int(0, n_areas - 1)));
    }
  }
  return s;
}

std::vector<WeightedSample> sample_sparse_field(const GridTopology& topology, const GustSchedule& schedule, int hour,
                                                const WindDistributions& dists, RngStream rng) {
  if (hour < 0 || hour >= schedule.storm_hours) {
    throw Error(ErrorCode::invalid_argument, fmt::format("sparse field: hour {} outside the storm", hour));
  }
  const bool gust_hour = schedule.is_gust_hour(hour);
  std::vector<WeightedSample> samples;
  samples.reserve(topology.service_areas().size());
  for (const auto& area : topology.service_areas()) {
    Point2D where = topology.substations()[static_cast<std::size_t>(area.substation_id)].location;
    if (!area.pole_ids.empty()) {
      const auto pick = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(area.pole_ids.size()) - 1));
      where = topology.poles()[static_cast<std::size_t>(area.pole_ids[pick])].location;
    }
    const auto& dist = gust_hour && schedule.is_gust_area(area.id) ? dists.gust : dists.sustained;
    samples.push_back({where, rng.lognormal(dist.mu, dist.sigma)});
  }
  return samples;
}

WindField build_wind_field(std::span<const WeightedSample> samples, double patch_size_km, Point2D lo, Point2D hi,
                           double idw_power) {
  if (samples.empty()) throw Error(ErrorCode::empty_input, "wind field: no sparse samples");
  if (!(patch_size_km > 0.0)) throw Error(ErrorCode::invalid_argument, "wind field: patch size must be > 0");
  WindField f;
  f.patch_size_km = patch_size_km;
  f.origin = lo;
  f.cols = std::max(1, static_cast<int>(std::ceil((hi.x - lo.x) / patch_size_km)));
  f.rows = std::max(1, static_cast<int>(std::ceil((hi.y - lo.y) / patch_size_km)));
  f.speeds.resize(static_cast<std::size_t>(f.rows * f.cols));
  for (int r = 0; r < f.rows; ++r) {
    for (int c = 0; c < f.cols; ++c) {
      f.speeds[static_cast<std::size_t>(r * f.cols + c)] = idw_interpolate(samples, f.patch_center(r, c), idw_power);
    }
  }
  return f;
}

double wind_at(const WindField& field, Point2D point) {
  const int col = std::clamp(static_cast<int>(std::floor((point.x - field.origin.x) / field.patch_size_km)), 0, field.cols - 1);
  const int row = std::clamp(static_cast<int>(std::floor((point.y - field.origin.y) / field.patch_size_km)), 0, field.rows - 1);
  return field.patch(row, col);
}

AnchorSet compute_anchors(const GridTopology& topology, RngStream rng) {
  AnchorSet anchors;
  anchors.reserve(topology.service_areas().size());
  for (const auto& area : topology.service_areas()) {
    std::vector<Point2D> mids;
    for (int l : topology.area_lines(area.id)) mids.push_back(topology.lines()[static_cast<std::size_t>(l)].midpoint);
    std::array<Point2D, kAnchorCount> set{};
    if (mids.empty()) {
      set.fill(topology.substations()[static_cast<std::size_t>(area.substation_id)].location);
    } else {
      const auto k = std::min(kAnchorCount, mids.size());
      const auto centroids = kmeans(mids, k, rng.derive(kAnchors, static_cast<std::uint64_t>(area.id)));
      for (std::size_t i = 0; i < kAnchorCount; ++i) set[i] = centroids[i % centroids.size()];
    }
    anchors.push_back(set);
  }
  return anchors;
}

WeatherRepresentation weather_representation(std::span<const WindField> fields, const AnchorSet& anchors) {
  WeatherRepresentation rep(anchors.size());
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    rep[a].reserve(fields.size());
    for (const auto& field : fields) {
      std::array<double, kAnchorCount> v{};
      for (std::size_t i = 0; i < kAnchorCount; ++i) v[i] = wind_at(field, anchors[a][i]);
      rep[a].push_back(v);
    }
  }
  return rep;
}

HazardScenario generate_scenario(const GridTopology& topology, const HazardConfig& config, RngStream rng) {
  HazardScenario scenario;
  const int n_areas = static_cast<int>(topology.service_areas().size());
  scenario.schedule = make_schedule(config, n_areas, rng.derive(kSchedule));
  const auto [lo, hi] = topology.bounding_box();
  scenario.fields.reserve(static_cast<std::size_t>(scenario.schedule.storm_hours));
  for (int h = 0; h < scenario.schedule.storm_hours; ++h) {
    const auto sparse =
        sample_sparse_field(topology, scenario.schedule, h, config.winds, rng.derive(kSparse, static_cast<std::uint64_t>(h)));
    scenario.fields.push_back(build_wind_field(sparse, config.patch_size_km, lo, hi, config.idw_power));
  }
  return scenario;
}

json HazardScenario::to_json() const {
  json doc;
  doc["schema"] = "gridres.hazard/1";
  doc["schedule"] = {{"storm_hours", schedule.storm_hours},
                     {"gust_hours", schedule.gust_hours},
                     {"gust_areas", schedule.gust_areas}};
  json hours = json::array();
  for (const auto& f : fields) {
    hours.push_back({{"rows", f.rows},
                     {"cols", f.cols},
                     {"patch_size_km", f.patch_size_km},
                     {"origin", json::array({f.origin.x, f.origin.y})},
                     {"speeds", f.speeds}});
  }
  doc["fields"] = std::move(hours);
  return doc;
}

HazardScenario HazardScenario::from_json(const json& doc) {
  try {
    HazardScenario s;
    const auto& sch = doc.at("schedule");
    s.schedule.storm_hours = sch.at("storm_hours").get<int>();
    s.schedule.gust_hours = sch.at("gust_hours").get<std::vector<int>>();
    s.schedule.gust_areas = sch.at("gust_areas").get<std::vector<int>>();
    for (const auto& j : doc.at("fields")) {
      WindField f;
      f.rows = j.at("rows").get<int>();
      f.cols = j.at("cols").get<int>();
      f.patch_size_km = j.at("patch_size_km").get<double>();
      f.origin = {j.at("origin").at(0).get<double>(), j.at("origin").at(1).get<double>()};
      f.speeds = j.at("speeds").get<std::vector<double>>();
      if (f.rows < 1 || f.cols < 1 || f.speeds.size() != static_cast<std::size_t>(f.rows * f.cols)) {
        throw Error(ErrorCode::parse_error, "hazard JSON: patch grid size mismatch");
      }
      s.fields.push_back(std::move(f));
    }
    if (static_cast<int>(s.fields.size()) != s.schedule.storm_hours) {
      throw Error(ErrorCode::parse_error, "hazard JSON: one field per storm hour expected");
    }
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, fmt::format("hazard JSON: {}", e.what()));
  }
}

}  // namespace gridres
