#include "gridres/topology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "gridres/error.hpp"

namespace gridres {

using nlohmann::json;

void TopologyGenConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::invalid_argument, fmt::format("topology config: {}", what));
  };
  require(n_service_areas >= 1, "n_service_areas must be >= 1");
  require(poles_per_area.lo >= 1 && poles_per_area.hi >= poles_per_area.lo, "poles_per_area must be a range >= 1");
  require(buildings_per_area.lo >= 1 && buildings_per_area.hi >= buildings_per_area.lo,
          "buildings_per_area must be a range >= 1");
  require(area_spacing_km > 0.0, "area_spacing_km must be > 0");
  require(mean_customers_per_building >= 1.0, "mean_customers_per_building must be >= 1");
  require(building_area_sigma >= 0.0, "building_area_sigma must be >= 0");
  require(tree_cover_mean > 0.0 && tree_cover_mean < 1.0, "tree_cover_mean must lie in (0, 1)");
  require(tree_cover_spread >= 0.0 && tree_cover_spread < 0.5, "tree_cover_spread must lie in [0, 0.5)");
  require(tree_cover_area_spread >= 0.0, "tree_cover_area_spread must be >= 0");
  require(neighbor_k >= 1, "neighbor_k must be >= 1");
}

GridTopology::GridTopology(std::vector<Substation> substations, std::vector<Pole> poles, std::vector<Line> lines,
                           std::vector<Building> buildings, std::vector<ServiceArea> areas)
    : substations_(std::move(substations)),
      poles_(std::move(poles)),
      lines_(std::move(lines)),
      buildings_(std::move(buildings)),
      areas_(std::move(areas)) {
  build_index();
}

void GridTopology::build_index() {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::invalid_argument, "topology: " + what); };
  const auto n_poles = poles_.size();
  for (std::size_t i = 0; i < substations_.size(); ++i) {
    if (substations_[i].id != static_cast<int>(i)) bad("substation ids must be 0..n-1");
  }
  for (std::size_t i = 0; i < areas_.size(); ++i) {
    const auto& a = areas_[i];
    if (a.id != static_cast<int>(i)) bad("service area ids must be 0..n-1");
    if (a.substation_id < 0 || static_cast<std::size_t>(a.substation_id) >= substations_.size()) {
      bad(fmt::format("area {} references unknown substation", a.id));
    }
  }
  std::vector<int> pole_area_seen(n_poles, -1);
  for (const auto& a : areas_) {
    for (int p : a.pole_ids) {
      if (p < 0 || static_cast<std::size_t>(p) >= n_poles) bad(fmt::format("area {} lists unknown pole {}", a.id, p));
      if (pole_area_seen[static_cast<std::size_t>(p)] != -1) bad(fmt::format("pole {} belongs to two areas", p));
      pole_area_seen[static_cast<std::size_t>(p)] = a.id;
    }
  }
  for (std::size_t i = 0; i < n_poles; ++i) {
    if (poles_[i].id != static_cast<int>(i)) bad("pole ids must be 0..n-1");
    if (pole_area_seen[i] != poles_[i].area_id) bad(fmt::format("pole {} area membership inconsistent", i));
  }

  parent_line_.assign(n_poles, -1);
  std::vector<std::vector<int>> children_of_pole(n_poles);
  std::vector<std::vector<int>> children_of_area(areas_.size());
  area_lines_.assign(areas_.size(), {});
  for (std::size_t i = 0; i < lines_.size(); ++i) {
    const auto& l = lines_[i];
    if (l.id != static_cast<int>(i)) bad("line ids must be 0..n-1");
    if (l.to_pole < 0 || static_cast<std::size_t>(l.to_pole) >= n_poles) bad(fmt::format("line {} feeds unknown pole", l.id));
    auto& slot = parent_line_[static_cast<std::size_t>(l.to_pole)];
    if (slot != -1) bad(fmt::format("pole {} is fed by two lines", l.to_pole));
    slot = l.id;
    const int area = poles_[static_cast<std::size_t>(l.to_pole)].area_id;
    if (l.area_id != area) bad(fmt::format("line {} area differs from its pole", l.id));
    if (!(l.tree_cover >= 0.0 && l.tree_cover <= 1.0)) bad(fmt::format("line {} tree cover outside [0, 1]", l.id));
    if (l.from.kind == NodeRef::Kind::substation) {
      if (l.from.id != areas_[static_cast<std::size_t>(area)].substation_id) {
        bad(fmt::format("line {} crosses service areas", l.id));
      }
      children_of_area[static_cast<std::size_t>(area)].push_back(l.to_pole);
    } else {
      if (l.from.id < 0 || static_cast<std::size_t>(l.from.id) >= n_poles) bad(fmt::format("line {} from unknown pole", l.id));
      if (poles_[static_cast<std::size_t>(l.from.id)].area_id != area) bad(fmt::format("line {} crosses service areas", l.id));
      children_of_pole[static_cast<std::size_t>(l.from.id)].push_back(l.to_pole);
    }
    area_lines_[static_cast<std::size_t>(area)].push_back(l.id);
  }
  for (std::size_t p = 0; p < n_poles; ++p) {
    if (parent_line_[p] == -1) bad(fmt::format("pole {} has no feeding line", p));
  }

  topo_order_.clear();
  topo_order_.reserve(n_poles);
  for (const auto& roots : children_of_area) {
    std::queue<int> q;
    for (int p : roots) q.push(p);
    while (!q.empty()) {
      const int p = q.front();
      q.pop();
      topo_order_.push_back(p);
      for (int c : children_of_pole[static_cast<std::size_t>(p)]) q.push(c);
    }
  }
  if (topo_order_.size() != n_poles) bad("line graph is not a tree rooted at the substations");

  pole_customers_.assign(n_poles, 0);
  for (std::size_t i = 0; i < buildings_.size(); ++i) {
    const auto& b = buildings_[i];
    if (b.id != static_cast<int>(i)) bad("building ids must be 0..n-1");
    if (b.pole_id < 0 || static_cast<std::size_t>(b.pole_id) >= n_poles) bad(fmt::format("building {} on unknown pole", b.id));
    if (b.customers < 1) bad(fmt::format("building {} needs at least one customer", b.id));
    pole_customers_[static_cast<std::size_t>(b.pole_id)] += b.customers;
  }

  subtree_customers_.assign(lines_.size(), 0);
  std::vector<std::int64_t> below(pole_customers_);
  for (auto it = topo_order_.rbegin(); it != topo_order_.rend(); ++it) {
    const auto p = static_cast<std::size_t>(*it);
    const auto& l = lines_[static_cast<std::size_t>(parent_line_[p])];
    subtree_customers_[static_cast<std::size_t>(l.id)] = below[p];
    if (l.from.kind == NodeRef::Kind::pole) below[static_cast<std::size_t>(l.from.id)] += below[p];
  }
  area_customers_.assign(areas_.size(), 0);
  for (std::size_t p = 0; p < n_poles; ++p) {
    area_customers_[static_cast<std::size_t>(poles_[p].area_id)] += pole_customers_[p];
  }
  total_customers_ = std::accumulate(area_customers_.begin(), area_customers_.end(), std::int64_t{0});
}

std::vector<char> GridTopology::connected_poles(const std::vector<char>& broken_mask) const {
  if (broken_mask.size() != lines_.size()) {
    throw Error(ErrorCode::length_mismatch, "broken mask size differs from line count");
  }
  std::vector<char> connected(poles_.size(), 0);
  for (int p : topo_order_) {
    const auto& l = lines_[static_cast<std::size_t>(parent_line_[static_cast<std::size_t>(p)])];
    if (broken_mask[static_cast<std::size_t>(l.id)]) continue;
    connected[static_cast<std::size_t>(p)] =
        l.from.kind == NodeRef::Kind::substation ? 1 : connected[static_cast<std::size_t>(l.from.id)];
  }
  return connected;
}

std::int64_t GridTopology::customers_served(const std::vector<char>& broken_mask) const {
  const auto connected = connected_poles(broken_mask);
  std::int64_t served = 0;
  for (std::size_t p = 0; p < poles_.size(); ++p) {
    if (connected[p]) served += pole_customers_[p];
  }
  return served;
}

std::int64_t GridTopology::customers_served(std::span<const int> broken_lines) const {
  std::vector<char> mask(lines_.size(), 0);
  for (int id : broken_lines) {
    if (id < 0 || static_cast<std::size_t>(id) >= lines_.size()) {
      throw Error(ErrorCode::unknown_id, fmt::format("unknown line id {}", id));
    }
    mask[static_cast<std::size_t>(id)] = 1;
  }
  return customers_served(mask);
}

std::vector<std::int64_t> GridTopology::area_customers_served(const std::vector<char>& broken_mask) const {
  const auto connected = connected_poles(broken_mask);
  std::vector<std::int64_t> served(areas_.size(), 0);
  for (std::size_t p = 0; p < poles_.size(); ++p) {
    if (connected[p]) served[static_cast<std::size_t>(poles_[p].area_id)] += pole_customers_[p];
  }
  return served;
}

std::int64_t GridTopology::line_criticality(int line_id) const {
  if (line_id < 0 || static_cast<std::size_t>(line_id) >= lines_.size()) {
    throw Error(ErrorCode::unknown_id, fmt::format("unknown line id {}", line_id));
  }
  return subtree_customers_[static_cast<std::size_t>(line_id)];
}

std::pair<Point2D, Point2D> GridTopology::bounding_box() const {
  Point2D lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  Point2D hi{-lo.x, -lo.y};
  auto grow = [&](Point2D p) {
    lo.x = std::min(lo.x, p.x);
    lo.y = std::min(lo.y, p.y);
    hi.x = std::max(hi.x, p.x);
    hi.y = std::max(hi.y, p.y);
  };
  for (const auto& s : substations_) grow(s.location);
  for (const auto& p : poles_) grow(p.location);
  for (const auto& b : buildings_) grow(b.location);
  if (substations_.empty() && poles_.empty() && buildings_.empty()) return {{0, 0}, {0, 0}};
  return {lo, hi};
}

namespace {

json point_json(Point2D p) { return json::array({p.x, p.y}); }

Point2D point_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

}  // namespace

json GridTopology::to_json() const {
  json doc;
  doc["schema"] = "gridres.topology/1";
  json subs = json::array();
  for (const auto& s : substations_) subs.push_back({{"id", s.id}, {"location", point_json(s.location)}});
  json poles = json::array();
  for (const auto& p : poles_) {
    poles.push_back({{"id", p.id}, {"location", point_json(p.location)}, {"service_area_id", p.area_id}});
  }
  json lines = json::array();
  for (const auto& l : lines_) {
    lines.push_back({{"id", l.id},
                     {"service_area_id", l.area_id},
                     {"from", {{"kind", l.from.kind == NodeRef::Kind::substation ? "substation" : "pole"},
                               {"id", l.from.id}}},
                     {"to_pole", l.to_pole},
                     {"midpoint", point_json(l.midpoint)},
                     {"tree_cover", l.tree_cover}});
  }
  json buildings = json::array();
  for (const auto& b : buildings_) {
    buildings.push_back(
        {{"id", b.id}, {"location", point_json(b.location)}, {"customers", b.customers}, {"pole_id", b.pole_id}});
  }
  json areas = json::array();
  for (const auto& a : areas_) {
    areas.push_back({{"id", a.id},
                     {"substation_id", a.substation_id},
                     {"pole_ids", a.pole_ids},
                     {"centroid", point_json(a.centroid)}});
  }
  doc["substations"] = std::move(subs);
  doc["poles"] = std::move(poles);
  doc["lines"] = std::move(lines);
  doc["buildings"] = std::move(buildings);
  doc["service_areas"] = std::move(areas);
  return doc;
}

GridTopology GridTopology::from_json(const json& doc) {
  try {
    std::vector<Substation> subs;
    for (const auto& j : doc.at("substations")) subs.push_back({j.at("id").get<int>(), point_from(j.at("location"))});
    std::vector<Pole> poles;
    for (const auto& j : doc.at("poles")) {
      poles.push_back({j.at("id").get<int>(), point_from(j.at("location")), j.at("service_area_id").get<int>()});
    }
    std::vector<Line> lines;
    for (const auto& j : doc.at("lines")) {
      Line l;
      l.id = j.at("id").get<int>();
      l.area_id = j.at("service_area_id").get<int>();
      const auto kind = j.at("from").at("kind").get<std::string>();
      if (kind != "substation" && kind != "pole") throw Error(ErrorCode::parse_error, "topology: bad line endpoint kind");
      l.from = {kind == "substation" ? NodeRef::Kind::substation : NodeRef::Kind::pole, j.at("from").at("id").get<int>()};
      l.to_pole = j.at("to_pole").get<int>();
      l.midpoint = point_from(j.at("midpoint"));
      l.tree_cover = j.at("tree_cover").get<double>();
      lines.push_back(l);
    }
    std::vector<Building> buildings;
    for (const auto& j : doc.at("buildings")) {
      buildings.push_back({j.at("id").get<int>(), point_from(j.at("location")), j.at("customers").get<int>(),
                           j.at("pole_id").get<int>()});
    }
    std::vector<ServiceArea> areas;
    for (const auto& j : doc.at("service_areas")) {
      areas.push_back({j.at("id").get<int>(), j.at("substation_id").get<int>(),
                       j.at("pole_ids").get<std::vector<int>>(), point_from(j.at("centroid"))});
    }
    return GridTopology(std::move(subs), std::move(poles), std::move(lines), std::move(buildings), std::move(areas));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, fmt::format("topology JSON: {}", e.what()));
  }
}

namespace {

struct AreaGraph {
  // Node 0 is the substation, node i + 1 is the area's i-th pole.
  std::vector<Point2D> nodes;
  std::vector<std::vector<std::pair<int, double>>> adj;

  void connect(int a, int b) {
    for (const auto& [n, w] : adj[static_cast<std::size_t>(a)]) {
      if (n == b) return;
    }
    const double w = distance(nodes[static_cast<std::size_t>(a)], nodes[static_cast<std::size_t>(b)]);
    adj[static_cast<std::size_t>(a)].emplace_back(b, w);
    adj[static_cast<std::size_t>(b)].emplace_back(a, w);
  }
};

int find_root(std::vector<int>& parent, int x) {
  while (parent[static_cast<std::size_t>(x)] != x) {
    parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
    x = parent[static_cast<std::size_t>(x)];
  }
  return x;
}

AreaGraph nearest_neighbor_graph(std::vector<Point2D> nodes, int k) {
  AreaGraph g;
  g.nodes = std::move(nodes);
  const int n = static_cast<int>(g.nodes.size());
  g.adj.assign(g.nodes.size(), {});
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<double, int>> cand;
    for (int j = 0; j < n; ++j) {
      if (j != i) cand.emplace_back(squared_distance(g.nodes[static_cast<std::size_t>(i)], g.nodes[static_cast<std::size_t>(j)]), j);
    }
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), cand.size());
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take), cand.end());
    for (std::size_t t = 0; t < take; ++t) g.connect(i, cand[t].second);
  }
  // Join components by their closest node pair until the graph is connected.
  for (;;) {
    std::vector<int> parent(static_cast<std::size_t>(n));
    std::iota(parent.begin(), parent.end(), 0);
    for (int i = 0; i < n; ++i) {
      for (const auto& [j, w] : g.adj[static_cast<std::size_t>(i)]) {
        parent[static_cast<std::size_t>(find_root(parent, i))] = find_root(parent, j);
      }
    }
    const int root0 = find_root(parent, 0);
    double best = std::numeric_limits<double>::infinity();
    int ba = -1, bb = -1;
    for (int i = 0; i < n; ++i) {
      if (find_root(parent, i) != root0) continue;
      for (int j = 0; j < n; ++j) {
        if (find_root(parent, j) == root0) continue;
        const double d = squared_distance(g.nodes[static_cast<std::size_t>(i)], g.nodes[static_cast<std::size_t>(j)]);
        if (d < best) {
          best = d;
          ba = i;
          bb = j;
        }
      }
    }
    if (ba < 0) break;
    g.connect(ba, bb);
  }
  return g;
}

/// Dijkstra from node 0; returns each node's predecessor (-1 for the root).
std::vector<int> shortest_path_tree(const AreaGraph& g) {
  const std::size_t n = g.nodes.size();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<int> pred(n, -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[0] = 0.0;
  pq.emplace(0.0, 0);
  while (!pq.empty()) {
    const auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[static_cast<std::size_t>(u)]) continue;
    for (const auto& [v, w] : g.adj[static_cast<std::size_t>(u)]) {
      const double nd = d + w;
      if (nd < dist[static_cast<std::size_t>(v)]) {
        dist[static_cast<std::size_t>(v)] = nd;
        pred[static_cast<std::size_t>(v)] = u;
        pq.emplace(nd, v);
      }
    }
  }
  return pred;
}

double sample_cover(RngStream& rng, double mean, double spread) {
  if (spread <= 0.0) return mean;
  // Beta with the requested mean and standard deviation, capped so both
  // shape parameters stay positive.
  const double max_var = mean * (1.0 - mean);
  const double var = std::min(spread * spread, 0.95 * max_var);
  const double concentration = max_var / var - 1.0;
  return std::clamp(rng.beta(mean * concentration, (1.0 - mean) * concentration), 0.0, 1.0);
}

}  // namespace

GridTopology generate_topology(const TopologyGenConfig& config, RngStream rng) {
  config.validate();
  const int n_areas = config.n_service_areas;
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_areas))));
  const double spacing = config.area_spacing_km;

  std::vector<Substation> subs;
  std::vector<Pole> poles;
  std::vector<Line> lines;
  std::vector<Building> buildings;
  std::vector<ServiceArea> areas;

  for (int a = 0; a < n_areas; ++a) {
    RngStream area_rng = rng.derive(1, static_cast<std::uint64_t>(a));
    const Point2D sub_loc{(a % cols) * spacing + area_rng.uniform(-0.15, 0.15) * spacing,
                          (a / cols) * spacing + area_rng.uniform(-0.15, 0.15) * spacing};
    subs.push_back({a, sub_loc});

    const auto n_poles = static_cast<int>(area_rng.uniform_int(config.poles_per_area.lo, config.poles_per_area.hi));
    const auto n_buildings =
        static_cast<int>(area_rng.uniform_int(config.buildings_per_area.lo, config.buildings_per_area.hi));
    const double half = 0.4 * spacing;

    std::vector<Point2D> nodes{sub_loc};
    const int first_pole = static_cast<int>(poles.size());
    ServiceArea area{a, a, {}, {}};
    for (int p = 0; p < n_poles; ++p) {
      const Point2D loc{sub_loc.x + area_rng.uniform(-half, half), sub_loc.y + area_rng.uniform(-half, half)};
      nodes.push_back(loc);
      poles.push_back({first_pole + p, loc, a});
      area.pole_ids.push_back(first_pole + p);
      area.centroid.x += loc.x / n_poles;
      area.centroid.y += loc.y / n_poles;
    }

    const double area_cover =
        std::clamp(area_rng.normal(config.tree_cover_mean, config.tree_cover_area_spread), 0.02, 0.98);
    const auto graph = nearest_neighbor_graph(nodes, config.neighbor_k);
    const auto pred = shortest_path_tree(graph);
    for (int node = 1; node <= n_poles; ++node) {
      const int parent = pred[static_cast<std::size_t>(node)];
      Line l;
      l.id = static_cast<int>(lines.size());
      l.area_id = a;
      l.from = parent == 0 ? NodeRef{NodeRef::Kind::substation, a} : NodeRef{NodeRef::Kind::pole, first_pole + parent - 1};
      l.to_pole = first_pole + node - 1;
      const Point2D pa = nodes[static_cast<std::size_t>(parent)];
      const Point2D pb = nodes[static_cast<std::size_t>(node)];
      l.midpoint = {0.5 * (pa.x + pb.x), 0.5 * (pa.y + pb.y)};
      l.tree_cover = sample_cover(area_rng, area_cover, config.tree_cover_spread);
      lines.push_back(l);
    }

    const double sigma = config.building_area_sigma;
    for (int b = 0; b < n_buildings; ++b) {
      const auto anchor = static_cast<std::size_t>(area_rng.uniform_int(1, n_poles));
      const Point2D loc{nodes[anchor].x + area_rng.normal(0.0, 0.05), nodes[anchor].y + area_rng.normal(0.0, 0.05)};
      int nearest = first_pole;
      double best = std::numeric_limits<double>::infinity();
      for (int p = 1; p <= n_poles; ++p) {
        const double d = squared_distance(loc, nodes[static_cast<std::size_t>(p)]);
        if (d < best) {
          best = d;
          nearest = first_pole + p - 1;
        }
      }
      // Footprint in units of the mean footprint; customers scale with it.
      const double footprint = area_rng.lognormal(-0.5 * sigma * sigma, sigma);
      const int customers =
          std::max(1, static_cast<int>(std::lround(footprint * config.mean_customers_per_building)));
      buildings.push_back({static_cast<int>(buildings.size()), loc, customers, nearest});
    }
    areas.push_back(std::move(area));
  }
  return GridTopology(std::move(subs), std::move(poles), std::move(lines), std::move(buildings), std::move(areas));
}

}  // namespace gridres
