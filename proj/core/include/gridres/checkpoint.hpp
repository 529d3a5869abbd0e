#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gridres/surrogate.hpp"

namespace gridres {

inline constexpr const char* kCheckpointSchema = "gridres.surrogate/1";

/// Standard base64 of the little-endian bytes of each double.
std::string encode_doubles(std::span<const double> values);
std::vector<double> decode_doubles(const std::string& text);

nlohmann::json config_to_json(const SurrogateConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
SurrogateConfig config_from_json(const nlohmann::json& doc, const std::string& path = "surrogate");

nlohmann::json checkpoint_to_json(const SurrogateModel& model);
SurrogateModel checkpoint_from_json(const nlohmann::json& doc);

void save_checkpoint(const SurrogateModel& model, const std::string& path);
SurrogateModel load_checkpoint(const std::string& path);

}  // namespace gridres
