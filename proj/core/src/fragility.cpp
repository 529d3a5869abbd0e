#include "gridres/fragility.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

#include "gridres/error.hpp"

namespace gridres {

void FragilityParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::invalid_argument, fmt::format("fragility: {}", what));
  };
  require(wind.p_max > 0.0 && wind.p_max <= 1.0, "wind.p_max must lie in (0, 1]");
  require(wind.steepness > 0.0, "wind.steepness must be > 0");
  require(tree.slope > 0.0, "tree.slope must be > 0");
  require(tree.coupling >= 0.0 && tree.coupling <= 1.0, "tree.coupling must lie in [0, 1]");
  require(std::isfinite(wind.midpoint) && std::isfinite(tree.activation), "thresholds must be finite");
}

FailureProbability failure_modes(double wind_speed, double tree_cover, const FragilityParams& params) {
  FailureProbability p;
  p.wind = params.wind.p_max / (1.0 + std::exp(-params.wind.steepness * (wind_speed - params.wind.midpoint)));
  const double activation = std::clamp(params.tree.slope * (wind_speed - params.tree.activation), 0.0, 1.0);
  p.tree = params.tree.coupling * tree_cover * activation;
  p.combined = 1.0 - (1.0 - p.wind) * (1.0 - p.tree);
  return p;
}

double hourly_failure_probability(double wind_speed, double tree_cover, const FragilityParams& params) {
  return failure_modes(wind_speed, tree_cover, params).combined;
}

std::vector<int> sample_failures(const GridTopology& topology, const WindField& field,
                                 const std::vector<char>& broken_mask, const FragilityParams& params, RngStream rng) {
  const auto& lines = topology.lines();
  if (broken_mask.size() != lines.size()) {
    throw Error(ErrorCode::length_mismatch, "sample_failures: mask size differs from line count");
  }
  std::vector<int> failed;
  for (const auto& line : lines) {
    const double u = rng.uniform();
    if (broken_mask[static_cast<std::size_t>(line.id)]) continue;
    const double p = hourly_failure_probability(wind_at(field, line.midpoint), line.tree_cover, params);
    if (u < p) failed.push_back(line.id);
  }
  return failed;
}

}  // namespace gridres
