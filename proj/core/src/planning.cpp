#include "gridres/planning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/core.h>

#include "gridres/error.hpp"
#include "gridres/numerics.hpp"

namespace gridres {

const char* to_string(PlanningMode mode) noexcept { return mode == PlanningMode::analytic ? "analytic" : "capped"; }

PlanningMode planning_mode_from_string(const std::string& text) {
  if (text == "analytic") return PlanningMode::analytic;
  if (text == "capped") return PlanningMode::capped;
  throw Error(ErrorCode::invalid_argument, fmt::format("unknown planning mode '{}'", text));
}

void PlanningInput::validate() const {
  if (scores.empty()) throw Error(ErrorCode::empty_benchmark, "planning: no event scores");
  for (double s : scores) {
    if (!(s >= 0.0 && s <= 1.0)) throw Error(ErrorCode::invalid_argument, "planning: scores must lie in [0, 1]");
  }
  if (!(pu > 0.0)) throw Error(ErrorCode::invalid_argument, "planning: pu must be > 0");
  if (!(np >= 1.0)) throw Error(ErrorCode::invalid_argument, "planning: np must be >= 1");
  if (!(target > 0.0)) throw Error(ErrorCode::invalid_argument, "planning: target must be > 0");
  if (target > 1.0) {
    throw Error(ErrorCode::infeasible_target, fmt::format("planning: target {} exceeds 1", target));
  }
}

double augmented_mean(const PlanningInput& input, double watts, PlanningMode mode) {
  const double x = watts / (input.pu * input.np);
  double s = 0.0;
  for (double r : input.scores) s += mode == PlanningMode::capped ? std::min(1.0, r + x) : r + x;
  return s / static_cast<double>(input.scores.size());
}

double plan_der_unweighted(const PlanningInput& input, PlanningMode mode) {
  input.validate();
  const double scale = input.pu * input.np;
  const double mean =
      std::accumulate(input.scores.begin(), input.scores.end(), 0.0) / static_cast<double>(input.scores.size());
  if (mean >= input.target) return 0.0;
  if (mode == PlanningMode::analytic) return scale * (input.target - mean);

  PlanningInput unit = input;
  unit.pu = 1.0;
  unit.np = 1.0;
  const auto gap = [&](double x) { return augmented_mean(unit, x, PlanningMode::capped) - input.target; };
  const double x = bisect(gap, 0.0, 1.0, 1e-13);
  return scale * x;
}

double weighting_exponent(const VulnerabilityProfile& profile, const WeightScheme& scheme) {
  profile.validate();
  return 1.0 + profile.lambda * scheme_factor_sum(profile.factors, scheme);
}

double plan_der_weighted(const PlanningInput& input, const VulnerabilityProfile& profile, const WeightScheme& scheme,
                         PlanningMode mode) {
  PlanningInput inner = input;
  inner.validate();
  inner.target = std::pow(input.target, 1.0 / weighting_exponent(profile, scheme));
  return plan_der_unweighted(inner, mode);
}

std::size_t saturated_events(const PlanningInput& input, double watts) {
  const double x = watts / (input.pu * input.np);
  return static_cast<std::size_t>(
      std::count_if(input.scores.begin(), input.scores.end(), [x](double r) { return r + x > 1.0; }));
}

}  // namespace gridres
