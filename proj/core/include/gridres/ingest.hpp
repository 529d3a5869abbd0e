#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "gridres/csv.hpp"
#include "gridres/metrics.hpp"

namespace gridres::ingest {

/// Customers-out counts for one system at sub-hourly cadence.
struct RawOutageSeries {
  std::string system_id;
  std::vector<std::int64_t> timestamps;  ///< epoch minutes, strictly increasing
  std::vector<double> customers_out;
};

/// Hourly values; hours missing from the source are simply absent.
struct HourlySeries {
  std::string system_id;
  std::vector<std::int64_t> hours;  ///< epoch hours, strictly increasing
  std::vector<double> values;
};

using NormalizedOutageSeries = HourlySeries;  ///< values are fraction out in [0, 1]

struct OutageEvent {
  std::string system_id;
  std::int64_t start_hour = 0;
  std::int64_t end_hour = 0;
  std::vector<double> fraction_out;
  PerformanceCurve curve;  ///< 1 - fraction_out

  std::int64_t duration_hours() const noexcept { return end_hour - start_hour + 1; }
};

struct EventRules {
  double threshold = 0.1;
  int merge_gap_hours = 3;
  int min_duration_hours = 6;
};

struct ScoredEvent {
  std::string system_id;
  int event_id = 0;
  std::int64_t start_hour = 0;
  std::int64_t end_hour = 0;
  ResilienceScore rs;
};

/// Maximum of the sub-hourly values inside each clock hour.
HourlySeries downsample_hourly(const RawOutageSeries& raw);

/// fraction = min(1, scale * customers_out / population).
NormalizedOutageSeries normalize_outages(const HourlySeries& hourly, double population, double scale = 2.0);

std::vector<OutageEvent> extract_events(const NormalizedOutageSeries& series, const EventRules& rules = {});

using EventGroups = std::map<std::string, std::vector<OutageEvent>>;

EventGroups filter_systems(EventGroups groups, std::size_t min_events = 2);

/// Event ids are 0-based ordinals within each system.
std::vector<ScoredEvent> events_to_scores(const std::vector<OutageEvent>& events);

/// Population per (system, year). Years without an entry fall back to the
/// nearest available year of that system.
class PopulationTable {
 public:
  void set(const std::string& system_id, int year, double population);
  double lookup(const std::string& system_id, int year) const;
  bool contains(const std::string& system_id) const { return table_.count(system_id) != 0; }

 private:
  std::map<std::string, std::map<int, double>> table_;
};

struct IngestOptions {
  double scale = 2.0;
  EventRules rules;
  std::size_t min_events = 2;
  std::set<std::string> exclude_systems;
};

struct IngestResult {
  EventGroups events;
  std::vector<ScoredEvent> scores;
  std::vector<std::string> dropped_systems;   ///< fewer than min_events events
  std::vector<std::string> excluded_systems;  ///< removed by the exclusion list
  std::size_t systems_seen = 0;
};

/// Normalizes each hour with the population of that hour's calendar year.
IngestResult run_pipeline(const std::map<std::string, RawOutageSeries>& raw, const PopulationTable& population,
                          const IngestOptions& options);

/// `timestamp_utc,system_id,customers_out`
std::map<std::string, RawOutageSeries> parse_outage_table(const csv::Table& table);
/// `system_id,year,population`
PopulationTable parse_population_table(const csv::Table& table);

/// `system_id,event_id,start_hour,end_hour,rs`
void write_scores_csv(std::ostream& out, const std::vector<ScoredEvent>& scores);
/// `system_id,event_id,hour,fraction_out,performance`
void write_events_csv(std::ostream& out, const EventGroups& events);

std::vector<ScoredEvent> parse_scores_table(const csv::Table& table);

}  // namespace gridres::ingest
