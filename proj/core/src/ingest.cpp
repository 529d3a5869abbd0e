#include "gridres/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include <fmt/core.h>

#include "gridres/error.hpp"
#include "gridres/timeutil.hpp"

namespace gridres::ingest {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

HourlySeries downsample_hourly(const RawOutageSeries& raw) {
  if (raw.timestamps.empty()) {
    throw Error(ErrorCode::empty_input, fmt::format("downsample: system {} has no samples", raw.system_id));
  }
  if (raw.timestamps.size() != raw.customers_out.size()) {
    throw Error(ErrorCode::length_mismatch, "downsample: timestamps and counts differ in length");
  }
  std::int64_t cadence = 0;
  for (std::size_t i = 1; i < raw.timestamps.size(); ++i) {
    const std::int64_t step = raw.timestamps[i] - raw.timestamps[i - 1];
    if (step <= 0) {
      throw Error(ErrorCode::invalid_argument,
                  fmt::format("downsample: system {} timestamps not strictly increasing", raw.system_id));
    }
    cadence = std::gcd(cadence, step);
  }
  if (cadence != 0 && 60 % cadence != 0 && cadence % 60 != 0) {
    throw Error(ErrorCode::invalid_argument,
                fmt::format("downsample: system {} cadence {} min does not divide an hour", raw.system_id, cadence));
  }

  HourlySeries out;
  out.system_id = raw.system_id;
  for (std::size_t i = 0; i < raw.timestamps.size(); ++i) {
    if (raw.customers_out[i] < 0.0) {
      throw Error(ErrorCode::invalid_argument, fmt::format("downsample: negative count for {}", raw.system_id));
    }
    const std::int64_t hour = floor_div(raw.timestamps[i], 60);
    if (out.hours.empty() || out.hours.back() != hour) {
      out.hours.push_back(hour);
      out.values.push_back(raw.customers_out[i]);
    } else {
      out.values.back() = std::max(out.values.back(), raw.customers_out[i]);
    }
  }
  return out;
}

NormalizedOutageSeries normalize_outages(const HourlySeries& hourly, double population, double scale) {
  if (!(population > 0.0)) {
    throw Error(ErrorCode::invalid_argument,
                fmt::format("normalize: population for {} must be > 0", hourly.system_id));
  }
  if (!(scale > 0.0)) throw Error(ErrorCode::invalid_argument, "normalize: scale must be > 0");
  NormalizedOutageSeries out = hourly;
  for (double& v : out.values) v = std::min(1.0, scale * v / population);
  return out;
}

std::vector<OutageEvent> extract_events(const NormalizedOutageSeries& series, const EventRules& rules) {
  struct Run {
    std::size_t first;  // index into series
    std::size_t last;
  };
  std::vector<Run> runs;
  for (std::size_t i = 0; i < series.hours.size(); ++i) {
    if (series.values[i] < rules.threshold) continue;
    if (!runs.empty() && runs.back().last + 1 == i && series.hours[i] == series.hours[i - 1] + 1) {
      runs.back().last = i;
    } else {
      runs.push_back({i, i});
    }
  }

  std::vector<OutageEvent> events;
  auto emit = [&](OutageEvent&& e) {
    if (e.duration_hours() < rules.min_duration_hours) return;
    e.curve.start_hour = e.start_hour;
    e.curve.samples.resize(e.fraction_out.size());
    std::transform(e.fraction_out.begin(), e.fraction_out.end(), e.curve.samples.begin(),
                   [](double f) { return 1.0 - f; });
    events.push_back(std::move(e));
  };

  OutageEvent current;
  bool open = false;
  for (const Run& run : runs) {
    const std::int64_t run_start = series.hours[run.first];
    if (open) {
      const std::int64_t gap = run_start - current.end_hour - 1;
      if (gap <= rules.merge_gap_hours) {
        const double a = current.fraction_out.back();
        const double b = series.values[run.first];
        const double span = static_cast<double>(run_start - current.end_hour);
        for (std::int64_t g = 1; g <= gap; ++g) {
          current.fraction_out.push_back(a + (b - a) * static_cast<double>(g) / span);
        }
      } else {
        emit(std::move(current));
        current = OutageEvent{};
        open = false;
      }
    }
    if (!open) {
      current.system_id = series.system_id;
      current.start_hour = run_start;
      open = true;
    }
    for (std::size_t i = run.first; i <= run.last; ++i) current.fraction_out.push_back(series.values[i]);
    current.end_hour = series.hours[run.last];
  }
  if (open) emit(std::move(current));
  return events;
}

EventGroups filter_systems(EventGroups groups, std::size_t min_events) {
  std::erase_if(groups, [&](const auto& kv) { return kv.second.size() < min_events; });
  return groups;
}

std::vector<ScoredEvent> events_to_scores(const std::vector<OutageEvent>& events) {
  std::vector<ScoredEvent> out;
  out.reserve(events.size());
  std::map<std::string, int> next_id;
  for (const auto& e : events) {
    out.push_back({e.system_id, next_id[e.system_id]++, e.start_hour, e.end_hour, trapezoid_resilience(e.curve)});
  }
  return out;
}

void PopulationTable::set(const std::string& system_id, int year, double population) {
  if (!(population > 0.0)) {
    throw Error(ErrorCode::invalid_argument,
                fmt::format("population for {} in {} must be > 0", system_id, year));
  }
  table_[system_id][year] = population;
}

double PopulationTable::lookup(const std::string& system_id, int year) const {
  auto it = table_.find(system_id);
  if (it == table_.end() || it->second.empty()) {
    throw Error(ErrorCode::unknown_system, fmt::format("no population for system {}", system_id));
  }
  const auto& years = it->second;
  auto hit = years.lower_bound(year);
  if (hit != years.end() && hit->first == year) return hit->second;
  if (hit == years.end()) return std::prev(hit)->second;
  if (hit == years.begin()) return hit->second;
  auto before = std::prev(hit);
  // Nearest year; the earlier one wins ties.
  return (year - before->first) <= (hit->first - year) ? before->second : hit->second;
}

IngestResult run_pipeline(const std::map<std::string, RawOutageSeries>& raw, const PopulationTable& population,
                          const IngestOptions& options) {
  IngestResult result;
  EventGroups groups;
  for (const auto& [id, series] : raw) {
    ++result.systems_seen;
    if (options.exclude_systems.count(id)) {
      result.excluded_systems.push_back(id);
      continue;
    }
    HourlySeries hourly = downsample_hourly(series);
    NormalizedOutageSeries normalized = hourly;
    for (std::size_t i = 0; i < hourly.hours.size(); ++i) {
      const double pop = population.lookup(id, timeutil::year_of_epoch_hour(hourly.hours[i]));
      normalized.values[i] = std::min(1.0, options.scale * hourly.values[i] / pop);
    }
    groups[id] = extract_events(normalized, options.rules);
  }
  for (const auto& [id, events] : groups) {
    if (events.size() < options.min_events) result.dropped_systems.push_back(id);
  }
  result.events = filter_systems(std::move(groups), options.min_events);
  for (const auto& [id, events] : result.events) {
    auto scored = events_to_scores(events);
    result.scores.insert(result.scores.end(), scored.begin(), scored.end());
  }
  return result;
}

std::map<std::string, RawOutageSeries> parse_outage_table(const csv::Table& table) {
  const auto c_time = table.column("timestamp_utc");
  const auto c_sys = table.column("system_id");
  const auto c_out = table.column("customers_out");
  struct Row {
    std::int64_t minute;
    double count;
    std::size_t row;
  };
  std::map<std::string, std::vector<Row>> rows;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& fields = table.rows[r];
    auto minute = timeutil::parse_rfc3339_minutes(fields[c_time]);
    if (!minute) csv::fail(table, r, fmt::format("invalid RFC 3339 timestamp '{}'", fields[c_time]));
    if (fields[c_sys].empty()) csv::fail(table, r, "empty system_id");
    const double count = csv::to_double(table, r, c_out);
    if (count < 0.0) csv::fail(table, r, "customers_out must be >= 0");
    rows[fields[c_sys]].push_back({*minute, count, r});
  }
  std::map<std::string, RawOutageSeries> out;
  for (auto& [id, list] : rows) {
    std::stable_sort(list.begin(), list.end(), [](const Row& a, const Row& b) { return a.minute < b.minute; });
    RawOutageSeries series;
    series.system_id = id;
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (i > 0 && list[i].minute == list[i - 1].minute) {
        csv::fail(table, list[i].row, fmt::format("duplicate timestamp for system {}", id));
      }
      series.timestamps.push_back(list[i].minute);
      series.customers_out.push_back(list[i].count);
    }
    out.emplace(id, std::move(series));
  }
  return out;
}

PopulationTable parse_population_table(const csv::Table& table) {
  const auto c_sys = table.column("system_id");
  const auto c_year = table.column("year");
  const auto c_pop = table.column("population");
  PopulationTable pop;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const double value = csv::to_double(table, r, c_pop);
    if (!(value > 0.0)) csv::fail(table, r, "population must be > 0");
    pop.set(table.rows[r][c_sys], static_cast<int>(csv::to_int(table, r, c_year)), value);
  }
  return pop;
}

void write_scores_csv(std::ostream& out, const std::vector<ScoredEvent>& scores) {
  out << "system_id,event_id,start_hour,end_hour,rs\n";
  for (const auto& s : scores) {
    out << fmt::format("{},{},{},{},{}\n", s.system_id, s.event_id, s.start_hour, s.end_hour,
                       csv::format_double(s.rs.value()));
  }
}

void write_events_csv(std::ostream& out, const EventGroups& events) {
  out << "system_id,event_id,hour,fraction_out,performance\n";
  for (const auto& [id, list] : events) {
    for (std::size_t e = 0; e < list.size(); ++e) {
      const auto& ev = list[e];
      for (std::size_t i = 0; i < ev.fraction_out.size(); ++i) {
        out << fmt::format("{},{},{},{},{}\n", id, e, ev.start_hour + static_cast<std::int64_t>(i),
                           csv::format_double(ev.fraction_out[i]), csv::format_double(ev.curve.samples[i]));
      }
    }
  }
}

std::vector<ScoredEvent> parse_scores_table(const csv::Table& table) {
  const auto c_sys = table.column("system_id");
  const auto c_event = table.column("event_id");
  const auto c_rs = table.column("rs");
  const auto c_start = table.find_column("start_hour");
  const auto c_end = table.find_column("end_hour");
  std::vector<ScoredEvent> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    ScoredEvent s;
    s.system_id = table.rows[r][c_sys];
    s.event_id = static_cast<int>(csv::to_int(table, r, c_event));
    if (c_start) s.start_hour = csv::to_int(table, r, *c_start);
    if (c_end) s.end_hour = csv::to_int(table, r, *c_end);
    const double rs = csv::to_double(table, r, c_rs);
    if (rs < 0.0 || rs > 1.0) csv::fail(table, r, "rs outside [0, 1]");
    s.rs = ResilienceScore(rs);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace gridres::ingest
