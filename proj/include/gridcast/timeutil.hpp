#pragma once

#include <cstdint>
#include <string>

namespace gridcast {

// Hours since the Unix epoch, UTC. The dataset timestamp unit.
using EpochHour = std::int64_t;

// Strict `YYYY-MM-DDTHH:00:00Z` round trip; anything else is rejected.
EpochHour parse_iso_hour(const std::string& text);
std::string format_iso_hour(EpochHour hour);

}  // namespace gridcast
