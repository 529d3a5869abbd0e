#include "gridres/recovery.hpp"

#include <algorithm>

#include <fmt/core.h>

#include "gridres/error.hpp"

namespace gridres {

void RecoveryConfig::validate() const {
  if (n_teams < 1) throw Error(ErrorCode::invalid_argument, "recovery: n_teams must be >= 1");
  if (repair_hours.lo < 1 || repair_hours.hi < repair_hours.lo) {
    throw Error(ErrorCode::invalid_argument, "recovery: repair_hours must be a range >= 1");
  }
}

std::vector<int> RestorationState::outstanding() const {
  std::vector<int> out(queue.begin(), queue.end());
  for (const auto& t : teams) {
    if (!t.idle()) out.push_back(t.assigned_line);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool RestorationState::complete() const noexcept {
  return queue.empty() && std::all_of(teams.begin(), teams.end(), [](const RepairTeam& t) { return t.idle(); });
}

std::vector<Point2D> initial_team_placement(const GridTopology& topology, int n_teams, RngStream rng) {
  const auto& areas = topology.service_areas();
  if (n_teams < 1 || static_cast<std::size_t>(n_teams) > areas.size()) {
    throw Error(ErrorCode::infeasible,
                fmt::format("team placement: {} teams for {} service areas", n_teams, areas.size()));
  }
  std::vector<Point2D> centroids;
  centroids.reserve(areas.size());
  for (const auto& a : areas) centroids.push_back(a.centroid);
  return kmeans(centroids, static_cast<std::size_t>(n_teams), rng);
}

std::vector<int> plan_repairs(const GridTopology& topology, std::vector<int> damaged) {
  std::vector<std::pair<std::int64_t, int>> keyed;
  keyed.reserve(damaged.size());
  for (int id : damaged) keyed.emplace_back(topology.line_criticality(id), id);
  std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::size_t i = 0; i < keyed.size(); ++i) damaged[i] = keyed[i].second;
  return damaged;
}

RestorationState start_restoration(const GridTopology& topology, std::span<const Point2D> team_locations,
                                   std::vector<int> damaged, int clock) {
  RestorationState state;
  const auto ordered = plan_repairs(topology, std::move(damaged));
  state.queue.assign(ordered.begin(), ordered.end());
  for (const auto& p : team_locations) state.teams.push_back({p, -1, clock});
  state.clock = clock;
  return state;
}

RestorationState step_restoration(RestorationState state, const GridTopology& topology, const RecoveryConfig& config,
                                  RngStream& rng) {
  state.just_repaired.clear();
  for (auto& team : state.teams) {
    if (!team.idle() || state.queue.empty()) continue;
    const int line = state.queue.front();
    state.queue.pop_front();
    team.assigned_line = line;
    team.busy_until = state.clock + static_cast<int>(rng.uniform_int(config.repair_hours.lo, config.repair_hours.hi));
    team.location = topology.lines()[static_cast<std::size_t>(line)].midpoint;
  }
  ++state.clock;
  for (auto& team : state.teams) {
    if (!team.idle() && team.busy_until <= state.clock) {
      state.repaired.push_back(team.assigned_line);
      state.just_repaired.push_back(team.assigned_line);
      team.assigned_line = -1;
    }
  }
  return state;
}

}  // namespace gridres
