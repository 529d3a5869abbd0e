#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace gridres::timeutil {

/// Parses an RFC 3339 timestamp ("2021-08-11T03:15:00Z", offsets and
/// fractional seconds allowed) into whole epoch minutes (UTC, floored).
std::optional<std::int64_t> parse_rfc3339_minutes(std::string_view text);

std::int64_t days_from_civil(int year, unsigned month, unsigned day) noexcept;

struct CivilDate {
  int year;
  unsigned month;
  unsigned day;
};
CivilDate civil_from_days(std::int64_t days) noexcept;

int year_of_epoch_hour(std::int64_t epoch_hour) noexcept;
/// Day of year, 1-based.
int day_of_year(std::int64_t epoch_hour) noexcept;

std::string format_rfc3339_hour(std::int64_t epoch_hour);

}  // namespace gridres::timeutil
