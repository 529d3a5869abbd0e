#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gridres/csv.hpp"
#include "gridres/dataset.hpp"
#include "gridres/metrics.hpp"
#include "gridres/surrogate.hpp"

namespace gridres {

/// Shared weather scenarios every system is scored against.
struct BenchmarkSet {
  std::vector<EventRecord> events;
  std::string provenance;

  void validate() const;
};

struct SystemEvaluation {
  std::string system_id;
  std::vector<double> scores;  ///< predicted Rs per benchmark event
  double ru = 0.0;
};

struct EvaluationStats {
  std::size_t clamped_values = 0;
};

/// Ru of each listed system: the mean prediction over all benchmark events.
std::vector<SystemEvaluation> evaluate_benchmark(const SurrogateModel& model, const std::vector<std::string>& systems,
                                                 const BenchmarkSet& benchmark, EvaluationStats* stats = nullptr);

using ProfileTable = std::map<std::string, VulnerabilityProfile>;

/// `system_id,f01..f15`; every profile receives the given lambda.
ProfileTable parse_profiles(const csv::Table& table, double lambda = 1.0 / 3.0);

struct ReportRow {
  std::string system_id;
  double ru = 0.0;
  double rw = 0.0;
  int rank_ru = 0;
  int rank_rw = 0;
  std::optional<double> der_watts;
  std::vector<double> scores;
};

struct ResilienceReport {
  std::string scheme;
  std::vector<ReportRow> rows;  ///< in system id order
  /// Spearman rho between Ru and Rw; absent with fewer than 3 systems or
  /// constant values.
  std::optional<SpearmanResult> ru_rw_correlation;
  /// Spearman rho between supplied ground truth and Ru.
  std::optional<SpearmanResult> truth_correlation;
};

/// 1-based descending ranks; ties go to the earlier position (system id order).
std::vector<int> descending_ranks(const std::vector<double>& values);

/// Rw per scheme, ranks under both metrics and the Ru/Rw correlation.
ResilienceReport rank_systems(const std::vector<SystemEvaluation>& evaluations, const ProfileTable& profiles,
                              const WeightScheme& scheme, const PermutationOptions& permutation = {});

/// Attaches the Spearman correlation between ground truth and Ru for the
/// systems present in both.
void correlate_with_truth(ResilienceReport& report, const std::map<std::string, double>& truth,
                          const PermutationOptions& permutation = {});

/// `system_id,ru,rw,rank_ru,rank_rw,der_watts`
void write_report_csv(std::ostream& out, const ResilienceReport& report);
nlohmann::json report_to_json(const ResilienceReport& report);
ResilienceReport report_from_json(const nlohmann::json& doc);

}  // namespace gridres
