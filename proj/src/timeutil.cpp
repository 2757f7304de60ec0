#include "gridcast/timeutil.hpp"

#include <cstdio>

#include "gridcast/errors.hpp"

namespace gridcast {

namespace {

// Civil-date conversions from the standard era decomposition
// (proleptic Gregorian calendar, day 0 = 1970-01-01).
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                       static_cast<unsigned>(d) - 1u;
  const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
  y = static_cast<int>(yy + (m <= 2));
}

bool days_in_month_ok(int y, int m, int d) {
  static const int lengths[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m < 1 || m > 12 || d < 1) return false;
  int len = lengths[m - 1];
  bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  if (m == 2 && leap) len = 29;
  return d <= len;
}

}  // namespace

EpochHour parse_iso_hour(const std::string& text) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char tail = '\0';
  int consumed = 0;
  int n = std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c%n", &y, &mo, &d,
                      &h, &mi, &s, &tail, &consumed);
  if (n != 7 || tail != 'Z' || consumed != static_cast<int>(text.size()) ||
      text.size() != 20) {
    throw DataError("bad timestamp '" + text +
                    "' (expected YYYY-MM-DDTHH:00:00Z)");
  }
  if (!days_in_month_ok(y, mo, d) || h < 0 || h > 23 || mi != 0 || s != 0) {
    throw DataError("bad timestamp '" + text +
                    "' (expected a valid whole hour, minutes and seconds 00)");
  }
  return days_from_civil(y, mo, d) * 24 + h;
}

std::string format_iso_hour(EpochHour hour) {
  std::int64_t days = hour / 24;
  int h = static_cast<int>(hour % 24);
  if (h < 0) {
    h += 24;
    days -= 1;
  }
  int y, m, d;
  civil_from_days(days, y, m, d);
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:00:00Z", y, m, d, h);
  return buf;
}

}  // namespace gridcast
