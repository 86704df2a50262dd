#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace vpp {

using Timestamp = std::chrono::sys_seconds;
using Seconds = std::chrono::seconds;

inline constexpr Seconds kHour{3600};
inline constexpr Seconds kDay{86400};

/// 1-based day of year (1..366), proleptic Gregorian, leap days included.
int day_of_year(Timestamp t);

/// Hour of day as a real number in [0, 24).
double hour_of_day(Timestamp t);

/// Whole hour of day in [0, 23].
int hour_index(Timestamp t);

/// Parses `YYYY-MM-DDTHH:MM[:SS][Z]` (a space is accepted in place of `T`).
Timestamp parse_timestamp(std::string_view text);

/// Formats as `YYYY-MM-DDTHH:MM:SS`.
std::string format_timestamp(Timestamp t);

}  // namespace vpp
