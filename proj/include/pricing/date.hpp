#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace pricing {

using Date = std::chrono::sys_days;
// Wall-clock time in the configured store timezone, minute precision.
using LocalTime = std::chrono::sys_seconds;

Date parse_date(std::string_view text);
std::string format_date(Date d);

// Parses "YYYY-MM-DD[T ]HH:MM[:SS][Z|+HH:MM|-HH:MM]". Timestamps carrying an
// explicit offset are shifted to `utc_offset_minutes`; naive ones are taken
// as already local.
LocalTime parse_timestamp(std::string_view text, int utc_offset_minutes = 0);

inline Date local_date(LocalTime t) { return std::chrono::floor<std::chrono::days>(t); }

inline bool is_weekday(Date d, std::chrono::weekday w) { return std::chrono::weekday{d} == w; }

std::chrono::weekday parse_weekday(std::string_view name);

} // namespace pricing
