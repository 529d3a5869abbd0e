#include "gridres/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include <fmt/core.h>

#include "gridres/error.hpp"
#include "gridres/timeutil.hpp"

namespace gridres {

namespace {

std::size_t either_column(const csv::Table& table, const char* a, const char* b) {
  if (auto c = table.find_column(a)) return *c;
  if (auto c = table.find_column(b)) return *c;
  throw Error(ErrorCode::parse_error, fmt::format("{}: missing column '{}' or '{}'", table.source, a, b));
}

}  // namespace

std::vector<EventRecord> parse_weather_table(const csv::Table& table) {
  const std::size_t c_sys = either_column(table, "area_id", "system_id");
  const std::size_t c_evt = either_column(table, "episode_id", "event_id");
  const std::size_t c_hour = table.column("hour");
  std::vector<std::size_t> features;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c != c_sys && c != c_evt && c != c_hour) features.push_back(c);
  }
  if (features.empty()) throw Error(ErrorCode::parse_error, fmt::format("{}: no feature columns", table.source));

  std::vector<EventRecord> records;
  std::map<std::pair<std::string, std::int64_t>, std::size_t> seen;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::string& sys = table.rows[r][c_sys];
    const std::int64_t evt = csv::to_int(table, r, c_evt);
    const std::int64_t hour = csv::to_int(table, r, c_hour);
    if (records.empty() || records.back().system_id != sys || records.back().event_id != evt) {
      if (!seen.emplace(std::make_pair(sys, evt), records.size()).second) {
        csv::fail(table, r, fmt::format("rows of event ({}, {}) are not contiguous", sys, evt));
      }
      EventRecord rec;
      rec.system_id = sys;
      rec.event_id = evt;
      rec.features.dim = features.size();
      records.push_back(std::move(rec));
    }
    EventRecord& rec = records.back();
    if (!rec.hours.empty() && hour <= rec.hours.back()) csv::fail(table, r, "hours must increase within an event");
    rec.hours.push_back(hour);
    for (std::size_t c : features) rec.features.values.push_back(csv::to_double(table, r, c));
    ++rec.features.steps;
  }
  return records;
}

void attach_labels(std::vector<EventRecord>& records, const csv::Table& labels) {
  const std::size_t c_sys = either_column(labels, "area_id", "system_id");
  const std::size_t c_evt = either_column(labels, "episode_id", "event_id");
  const std::size_t c_rs = labels.column("rs");
  std::map<std::pair<std::string, std::int64_t>, double> by_key;
  for (std::size_t r = 0; r < labels.rows.size(); ++r) {
    const double rs = csv::to_double(labels, r, c_rs);
    if (!(rs >= 0.0 && rs <= 1.0)) csv::fail(labels, r, "rs must lie in [0, 1]");
    if (!by_key.emplace(std::make_pair(labels.rows[r][c_sys], csv::to_int(labels, r, c_evt)), rs).second) {
      csv::fail(labels, r, "duplicate label");
    }
  }
  for (auto& rec : records) {
    auto it = by_key.find({rec.system_id, rec.event_id});
    if (it == by_key.end()) {
      throw Error(ErrorCode::parse_error,
                  fmt::format("{}: no label for system {} event {}", labels.source, rec.system_id, rec.event_id));
    }
    rec.label = it->second;
  }
}

std::vector<EventRecord> records_from_simulation(const SimDataset& dataset) {
  std::vector<EventRecord> out;
  out.reserve(dataset.samples.size());
  for (const auto& s : dataset.samples) {
    EventRecord rec;
    rec.system_id = std::to_string(s.area_id);
    rec.event_id = static_cast<std::int64_t>(s.episode_id);
    rec.features = Sequence(s.weather.size(), kAnchorCount);
    for (std::size_t h = 0; h < s.weather.size(); ++h) {
      rec.hours.push_back(static_cast<std::int64_t>(h));
      std::copy(s.weather[h].begin(), s.weather[h].end(), rec.features.row(h).begin());
    }
    rec.label = s.rs;
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<std::string> system_ids(std::span<const EventRecord> records) {
  std::vector<std::string> ids;
  for (const auto& r : records) ids.push_back(r.system_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

std::array<double, 2> time_embedding(std::int64_t epoch_hour) {
  const double angle = 2.0 * std::numbers::pi * timeutil::day_of_year(epoch_hour) / 365.25;
  return {std::sin(angle), std::cos(angle)};
}

Sequence model_input(const EventRecord& record, bool with_time_embedding) {
  if (!with_time_embedding) return record.features;
  const std::size_t dim = record.features.dim;
  Sequence s(record.features.steps, dim + 2);
  for (std::size_t t = 0; t < s.steps; ++t) {
    auto src = record.features.row(t);
    auto dst = s.row(t);
    std::copy(src.begin(), src.end(), dst.begin());
    const auto emb = time_embedding(record.hours[t]);
    dst[dim] = emb[0];
    dst[dim + 1] = emb[1];
  }
  return s;
}

FeatureScaler fit_scaler(std::span<const EventRecord> records, std::span<const std::size_t> indices) {
  std::vector<const Sequence*> seqs;
  seqs.reserve(indices.size());
  for (std::size_t i : indices) seqs.push_back(&records[i].features);
  if (seqs.empty()) throw Error(ErrorCode::split_infeasible, "scaler: no training records");
  return FeatureScaler::fit(seqs);
}

std::vector<TrainingSample> build_samples(const SurrogateModel& model, std::span<const EventRecord> records,
                                          std::span<const std::size_t> indices) {
  std::vector<TrainingSample> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    const EventRecord& rec = records[i];
    if (!rec.has_label()) {
      throw Error(ErrorCode::invalid_argument,
                  fmt::format("record ({}, {}) has no label", rec.system_id, rec.event_id));
    }
    TrainingSample s;
    s.sequence = model_input(rec, model.time_embedding());
    model.scaler().transform(s.sequence);
    s.system = model.system_index(rec.system_id);
    s.label = rec.label;
    out.push_back(std::move(s));
  }
  return out;
}

int model_input_dim(std::span<const EventRecord> records, bool with_time_embedding) {
  if (records.empty()) throw Error(ErrorCode::empty_input, "dataset is empty");
  const std::size_t dim = records.front().features.dim;
  for (const auto& r : records) {
    if (r.features.dim != dim) throw Error(ErrorCode::dimension_mismatch, "records have mixed feature widths");
  }
  return static_cast<int>(dim) + (with_time_embedding ? 2 : 0);
}

}  // namespace gridres
