#pragma once

#include <deque>
#include <vector>

#include "gridres/numerics.hpp"
#include "gridres/rng.hpp"
#include "gridres/topology.hpp"

namespace gridres {

struct RecoveryConfig {
  int n_teams = 15;
  IntRange repair_hours{2, 4};

  void validate() const;
  bool operator==(const RecoveryConfig&) const = default;
};

struct RepairTeam {
  Point2D location;
  int assigned_line = -1;  ///< -1 when idle
  int busy_until = 0;      ///< hour the current repair completes

  bool idle() const noexcept { return assigned_line < 0; }
};

/// Crew-based restoration. Teams move instantly to their next line; a team
/// never abandons an assigned line.
struct RestorationState {
  std::deque<int> queue;            ///< damaged lines awaiting a team
  std::vector<RepairTeam> teams;
  std::vector<int> repaired;        ///< in completion order
  std::vector<int> just_repaired;   ///< completed during the last step
  int clock = 0;                    ///< current hour

  /// Queued plus in-progress lines.
  std::vector<int> outstanding() const;
  bool complete() const noexcept;
};

/// One team per K-Means centroid of the service-area centroids.
std::vector<Point2D> initial_team_placement(const GridTopology& topology, int n_teams, RngStream rng);

/// Damaged lines by descending intact-network criticality, ascending id on ties.
std::vector<int> plan_repairs(const GridTopology& topology, std::vector<int> damaged);

RestorationState start_restoration(const GridTopology& topology, std::span<const Point2D> team_locations,
                                   std::vector<int> damaged, int clock);

/// Advances one hour: idle teams take lines from the queue head with a
/// repair duration drawn uniformly from repair_hours, then the clock moves
/// forward and every team whose busy_until has been reached completes.
RestorationState step_restoration(RestorationState state, const GridTopology& topology, const RecoveryConfig& config,
                                  RngStream& rng);

}  // namespace gridres
