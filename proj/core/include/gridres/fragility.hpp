#pragma once

#include <vector>

#include "gridres/hazard.hpp"
#include "gridres/rng.hpp"
#include "gridres/topology.hpp"

namespace gridres {

/// Two independent failure modes per line and hour: a logistic wind curve
/// and a tree-fall term that activates linearly above v_t. Defaults are
/// illustrative.
struct FragilityParams {
  struct Wind {
    double midpoint = 30.0;  ///< v0, m/s
    double steepness = 0.3;  ///< k, 1/(m/s)
    double p_max = 0.2;
    bool operator==(const Wind&) const = default;
  } wind;
  struct Tree {
    double coupling = 0.5;     ///< c
    double activation = 15.0;  ///< v_t, m/s
    double slope = 0.05;       ///< s, 1/(m/s)
    bool operator==(const Tree&) const = default;
  } tree;

  void validate() const;
  bool operator==(const FragilityParams&) const = default;
};

struct FailureProbability {
  double wind = 0.0;
  double tree = 0.0;
  double combined = 0.0;
};

FailureProbability failure_modes(double wind_speed, double tree_cover, const FragilityParams& params);

double hourly_failure_probability(double wind_speed, double tree_cover, const FragilityParams& params);

/// Every line not yet marked in `broken_mask` fails independently at the
/// probability of its midpoint wind and tree cover. Returns the new failures
/// in ascending id order; the mask is not modified.
std::vector<int> sample_failures(const GridTopology& topology, const WindField& field,
                                 const std::vector<char>& broken_mask, const FragilityParams& params, RngStream rng);

}  // namespace gridres
