#pragma once

#include <span>
#include <string>
#include <vector>

#include "gridres/metrics.hpp"

namespace gridres {

enum class PlanningMode {
  analytic,  ///< augmented per-event scores may exceed 1
  capped,    ///< augmented scores saturate at 1
};

const char* to_string(PlanningMode mode) noexcept;
PlanningMode planning_mode_from_string(const std::string& text);

struct PlanningInput {
  std::vector<double> scores;  ///< per-event Rs
  double pu = 600.0;           ///< watts per customer
  double np = 1.0;             ///< customers
  double target = 0.9;

  void validate() const;
};

/// Mean of min(1, Rs + P / (Pu Np)) when capped, of Rs + P / (Pu Np) otherwise.
double augmented_mean(const PlanningInput& input, double watts, PlanningMode mode);

/// Minimum DER watts lifting the mean per-event score to the target.
double plan_der_unweighted(const PlanningInput& input, PlanningMode mode = PlanningMode::analytic);

/// Exponent 1 + lambda * S of the weighted metric for this profile.
double weighting_exponent(const VulnerabilityProfile& profile, const WeightScheme& scheme);

/// Plans against the unweighted target target^(1 / exponent).
double plan_der_weighted(const PlanningInput& input, const VulnerabilityProfile& profile, const WeightScheme& scheme,
                         PlanningMode mode = PlanningMode::analytic);

/// Events whose analytic augmented score would exceed 1.
std::size_t saturated_events(const PlanningInput& input, double watts);

}  // namespace gridres
