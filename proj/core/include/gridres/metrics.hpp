#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace gridres {

/// Hourly normalized system performance, one sample per hour starting at
/// start_hour (epoch hours). Samples lie in [0, 1].
struct PerformanceCurve {
  std::int64_t start_hour = 0;
  std::vector<double> samples;

  std::int64_t end_hour() const noexcept {
    return start_hour + static_cast<std::int64_t>(samples.size()) - 1;
  }
};

/// Resilience fraction in [0, 1]. Kept at full precision; reports round.
class ResilienceScore {
 public:
  ResilienceScore() = default;
  explicit ResilienceScore(double value);

  double value() const noexcept { return value_; }

  auto operator<=>(const ResilienceScore&) const = default;

 private:
  double value_ = 0.0;
};

inline constexpr std::size_t kFactorCount = 15;

/// Socio-economic factor names in the column order f01..f15.
const std::array<std::string, kFactorCount>& factor_names();

struct VulnerabilityProfile {
  std::string system_id;
  std::array<double, kFactorCount> factors{};
  double lambda = 1.0 / 3.0;

  void validate() const;
};

struct PlainSum {};
struct GroupEmphasis {
  std::array<double, kFactorCount> multipliers{};
};
struct ConcentrationPenalty {
  double threshold = 0.2;
  double penalty = 3.0;
};
using WeightScheme = std::variant<PlainSum, GroupEmphasis, ConcentrationPenalty>;

void validate(const WeightScheme& scheme);

/// The group-emphasis example: weight 5 on disability, elderly living alone
/// and low-income households, 1 elsewhere.
GroupEmphasis vulnerable_group_emphasis(double weight = 5.0);

std::string scheme_name(const WeightScheme& scheme);

/// Trapezoidal integral of the curve divided by its span of samples - 1 hours.
ResilienceScore trapezoid_resilience(const PerformanceCurve& curve);
ResilienceScore trapezoid_resilience(std::span<const double> samples);

ResilienceScore unweighted_resilience(std::span<const ResilienceScore> scores);
ResilienceScore unweighted_resilience(std::span<const double> scores);

/// Factor sum after the scheme's transform.
double scheme_factor_sum(const std::array<double, kFactorCount>& factors, const WeightScheme& scheme);

/// ru ^ (1 + lambda * S).
ResilienceScore weighted_resilience(ResilienceScore ru, const VulnerabilityProfile& profile,
                                    const WeightScheme& scheme);

/// Fractional (average) ranks, 1-based.
std::vector<double> average_ranks(std::span<const double> values);

struct SpearmanResult {
  double rho = 0.0;
  double p_value = 1.0;
};

struct PermutationOptions {
  int iterations = 10'000;
  std::uint64_t seed = 0x5EED;
};

/// Spearman rank correlation; the two-sided p-value comes from a permutation
/// test, p = (1 + #{|rho_perm| >= |rho|}) / (1 + iterations). Zero iterations
/// skips the test and reports p = 1.
SpearmanResult spearman_rho(std::span<const double> x, std::span<const double> y,
                            const PermutationOptions& options = {});

}  // namespace gridres
