#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gridres/numerics.hpp"
#include "gridres/rng.hpp"

namespace gridres {

struct Substation {
  int id = 0;
  Point2D location;
};

struct Pole {
  int id = 0;
  Point2D location;
  int area_id = 0;
};

/// Upstream end of a line: the area's substation or another pole.
struct NodeRef {
  enum class Kind { substation, pole };
  Kind kind = Kind::substation;
  int id = 0;

  bool operator==(const NodeRef&) const = default;
};

/// Line feeding `to_pole` from its parent node. Only these lines can fail.
struct Line {
  int id = 0;
  int area_id = 0;
  NodeRef from;
  int to_pole = 0;
  Point2D midpoint;
  double tree_cover = 0.0;
};

struct Building {
  int id = 0;
  Point2D location;
  int customers = 1;
  int pole_id = 0;
};

struct ServiceArea {
  int id = 0;
  int substation_id = 0;
  std::vector<int> pole_ids;
  Point2D centroid;
};

struct IntRange {
  int lo = 1;
  int hi = 1;

  bool operator==(const IntRange&) const = default;
};

struct TopologyGenConfig {
  int n_service_areas = 55;
  IntRange poles_per_area{40, 80};
  IntRange buildings_per_area{60, 140};
  double area_spacing_km = 3.0;
  double mean_customers_per_building = 4.0;
  /// Log-space sigma of the sampled building footprint.
  double building_area_sigma = 0.6;
  double tree_cover_mean = 0.35;
  double tree_cover_spread = 0.12;
  /// Standard deviation of the per-area tree-cover mean around tree_cover_mean.
  double tree_cover_area_spread = 0.15;
  /// Pole graph degree used before extracting the shortest-path tree.
  int neighbor_k = 4;

  void validate() const;
  bool operator==(const TopologyGenConfig&) const = default;
};

/// Radial distribution network. Immutable once built; every query is
/// read-only. Ids equal positions in their vectors.
class GridTopology {
 public:
  GridTopology() = default;
  GridTopology(std::vector<Substation> substations, std::vector<Pole> poles, std::vector<Line> lines,
               std::vector<Building> buildings, std::vector<ServiceArea> areas);

  const std::vector<Substation>& substations() const noexcept { return substations_; }
  const std::vector<Pole>& poles() const noexcept { return poles_; }
  const std::vector<Line>& lines() const noexcept { return lines_; }
  const std::vector<Building>& buildings() const noexcept { return buildings_; }
  const std::vector<ServiceArea>& service_areas() const noexcept { return areas_; }

  std::int64_t total_customers() const noexcept { return total_customers_; }
  std::int64_t area_customers(int area_id) const { return area_customers_.at(static_cast<std::size_t>(area_id)); }
  /// Lines of an area, ascending id.
  const std::vector<int>& area_lines(int area_id) const { return area_lines_.at(static_cast<std::size_t>(area_id)); }
  /// Line feeding a pole.
  int parent_line(int pole_id) const { return parent_line_.at(static_cast<std::size_t>(pole_id)); }

  /// Customers whose pole still reaches its substation. Throws unknown_id.
  std::int64_t customers_served(std::span<const int> broken_lines) const;
  /// Same with a per-line broken mask (size = lines().size()).
  std::int64_t customers_served(const std::vector<char>& broken_mask) const;
  /// Served customers per area for a broken mask.
  std::vector<std::int64_t> area_customers_served(const std::vector<char>& broken_mask) const;

  /// Customers lost if only this line fails on the intact network.
  std::int64_t line_criticality(int line_id) const;

  /// (min, max) corners over substations, poles and buildings.
  std::pair<Point2D, Point2D> bounding_box() const;

  nlohmann::json to_json() const;
  static GridTopology from_json(const nlohmann::json& doc);

 private:
  void build_index();
  std::vector<char> connected_poles(const std::vector<char>& broken_mask) const;

  std::vector<Substation> substations_;
  std::vector<Pole> poles_;
  std::vector<Line> lines_;
  std::vector<Building> buildings_;
  std::vector<ServiceArea> areas_;

  std::vector<int> parent_line_;            // per pole
  std::vector<int> topo_order_;             // poles, parents before children
  std::vector<std::int64_t> pole_customers_;
  std::vector<std::int64_t> subtree_customers_;  // per line
  std::vector<std::int64_t> area_customers_;
  std::vector<std::vector<int>> area_lines_;
  std::int64_t total_customers_ = 0;
};

GridTopology generate_topology(const TopologyGenConfig& config, RngStream rng);

}  // namespace gridres
