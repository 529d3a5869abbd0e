#include "gridres/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/core.h>

#include "gridres/error.hpp"
#include "gridres/rng.hpp"

namespace gridres {

ResilienceScore::ResilienceScore(double value) : value_(value) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw Error(ErrorCode::invalid_argument,
                fmt::format("resilience score {} outside [0, 1]", value));
  }
}

const std::array<std::string, kFactorCount>& factor_names() {
  static const std::array<std::string, kFactorCount> names = {
      "households_without_vehicle",
      "workers_required_on_site",
      "people_with_disability",
      "younger_adults",
      "limited_english",
      "households_with_children",
      "less_educated_adults",
      "low_income_households",
      "elderly_living_alone",
      "multi_family_housing",
      "older_adults_65_plus",
      "children_under_5",
      "electricity_dependent_medical",
      "nursing_home_residents",
      "mobility_limitations",
  };
  return names;
}

void VulnerabilityProfile::validate() const {
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (!(factors[i] >= 0.0) || !std::isfinite(factors[i])) {
      throw Error(ErrorCode::invalid_argument,
                  fmt::format("profile {}: factor f{:02} must be >= 0", system_id, i + 1));
    }
  }
  if (!(lambda > 0.0)) {
    throw Error(ErrorCode::invalid_argument, fmt::format("profile {}: lambda must be > 0", system_id));
  }
}

void validate(const WeightScheme& scheme) {
  if (const auto* g = std::get_if<GroupEmphasis>(&scheme)) {
    for (double m : g->multipliers) {
      if (!(m >= 0.0)) throw Error(ErrorCode::invalid_argument, "group emphasis multipliers must be >= 0");
    }
  } else if (const auto* c = std::get_if<ConcentrationPenalty>(&scheme)) {
    if (!(c->threshold > 0.0 && c->threshold < 1.0)) {
      throw Error(ErrorCode::invalid_argument, "concentration threshold must lie in (0, 1)");
    }
    if (!(c->penalty >= 1.0)) throw Error(ErrorCode::invalid_argument, "concentration penalty must be >= 1");
  }
}

GroupEmphasis vulnerable_group_emphasis(double weight) {
  GroupEmphasis g;
  g.multipliers.fill(1.0);
  g.multipliers[2] = weight;  // people with a disability
  g.multipliers[8] = weight;  // elderly adults living alone
  g.multipliers[7] = weight;  // low-income households
  return g;
}

std::string scheme_name(const WeightScheme& scheme) {
  switch (scheme.index()) {
    case 0: return "plain-sum";
    case 1: return "group-emphasis";
    default: return "concentration-penalty";
  }
}

ResilienceScore trapezoid_resilience(std::span<const double> samples) {
  if (samples.size() < 2) {
    throw Error(ErrorCode::degenerate_window,
                fmt::format("trapezoid: window of {} samples needs at least 2", samples.size()));
  }
  const double base = samples[0];
  double area = 0.0;
  for (std::size_t i = 1; i < samples.size(); ++i) area += 0.5 * ((samples[i - 1] - base) + (samples[i] - base));
  const double value = base + area / static_cast<double>(samples.size() - 1);
  return ResilienceScore(std::clamp(value, 0.0, 1.0));
}

ResilienceScore trapezoid_resilience(const PerformanceCurve& curve) {
  return trapezoid_resilience(std::span<const double>(curve.samples));
}

ResilienceScore unweighted_resilience(std::span<const double> scores) {
  if (scores.empty()) throw Error(ErrorCode::empty_benchmark, "unweighted resilience of an empty benchmark");
  const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
  return ResilienceScore(std::clamp(mean, 0.0, 1.0));
}

ResilienceScore unweighted_resilience(std::span<const ResilienceScore> scores) {
  std::vector<double> values;
  values.reserve(scores.size());
  for (const auto& s : scores) values.push_back(s.value());
  return unweighted_resilience(std::span<const double>(values));
}

double scheme_factor_sum(const std::array<double, kFactorCount>& factors, const WeightScheme& scheme) {
  double sum = 0.0;
  if (std::holds_alternative<PlainSum>(scheme)) {
    for (double w : factors) sum += w;
  } else if (const auto* g = std::get_if<GroupEmphasis>(&scheme)) {
    for (std::size_t i = 0; i < kFactorCount; ++i) sum += g->multipliers[i] * factors[i];
  } else {
    const auto& c = std::get<ConcentrationPenalty>(scheme);
    for (double w : factors) sum += w > c.threshold ? w * c.penalty : w;
  }
  return sum;
}

ResilienceScore weighted_resilience(ResilienceScore ru, const VulnerabilityProfile& profile,
                                    const WeightScheme& scheme) {
  const double exponent = 1.0 + profile.lambda * scheme_factor_sum(profile.factors, scheme);
  return ResilienceScore(std::pow(ru.value(), exponent));
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

namespace {

double pearson(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

double variance_sum(std::span<const double> a) {
  const double m = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
  double s = 0.0;
  for (double v : a) s += (v - m) * (v - m);
  return s;
}

}  // namespace

SpearmanResult spearman_rho(std::span<const double> x, std::span<const double> y,
                            const PermutationOptions& options) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::length_mismatch,
                fmt::format("spearman: lengths {} and {} differ", x.size(), y.size()));
  }
  if (x.size() < 3) throw Error(ErrorCode::length_mismatch, "spearman: need at least 3 pairs");
  const auto rx = average_ranks(x);
  auto ry = average_ranks(y);
  if (variance_sum(rx) == 0.0 || variance_sum(ry) == 0.0) {
    throw Error(ErrorCode::undefined_correlation, "spearman: zero rank variance");
  }
  SpearmanResult result;
  result.rho = std::clamp(pearson(rx, ry), -1.0, 1.0);
  if (options.iterations <= 0) return result;

  RngStream rng(options.seed, 0);
  const double observed = std::abs(result.rho);
  const double cutoff = observed - 1e-12;
  int extreme = 0;
  for (int it = 0; it < options.iterations; ++it) {
    rng.shuffle(std::span<double>(ry));
    if (std::abs(pearson(rx, ry)) >= cutoff) ++extreme;
  }
  result.p_value = (1.0 + extreme) / (1.0 + options.iterations);
  return result;
}

}  // namespace gridres
