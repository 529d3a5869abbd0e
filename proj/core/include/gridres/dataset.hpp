#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "gridres/csv.hpp"
#include "gridres/simulation.hpp"
#include "gridres/surrogate.hpp"

namespace gridres {

/// One weather event for one system, with raw (unnormalized) features.
struct EventRecord {
  std::string system_id;
  std::int64_t event_id = 0;
  std::vector<std::int64_t> hours;  ///< per step; epoch hours for ingested data
  Sequence features;
  double label = std::numeric_limits<double>::quiet_NaN();

  bool has_label() const noexcept { return label == label; }
};

/// Weather rows keyed by (area_id|system_id, episode_id|event_id, hour);
/// every remaining column is a feature. Rows of one event must be contiguous
/// with increasing hours.
std::vector<EventRecord> parse_weather_table(const csv::Table& table);

/// Joins labels keyed the same way with an `rs` column. Every record must
/// receive a label.
void attach_labels(std::vector<EventRecord>& records, const csv::Table& labels);

/// Records straight from a simulated dataset; system ids are area ids.
std::vector<EventRecord> records_from_simulation(const SimDataset& dataset);

/// Sorted unique system ids.
std::vector<std::string> system_ids(std::span<const EventRecord> records);

/// sin and cos of 2 pi doy / 365.25 for an epoch hour.
std::array<double, 2> time_embedding(std::int64_t epoch_hour);

/// Raw features with the two time-embedding columns appended when enabled.
Sequence model_input(const EventRecord& record, bool with_time_embedding);

FeatureScaler fit_scaler(std::span<const EventRecord> records, std::span<const std::size_t> indices);

/// Normalized samples for the given records; every record needs a label and
/// a system known to the model.
std::vector<TrainingSample> build_samples(const SurrogateModel& model, std::span<const EventRecord> records,
                                          std::span<const std::size_t> indices);

/// Feature width the model sees for these records.
int model_input_dim(std::span<const EventRecord> records, bool with_time_embedding);

}  // namespace gridres
