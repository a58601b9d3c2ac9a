#pragma once

// Timestamp plumbing. Simulation time is seconds since the Unix epoch as a
// double; logs serialize it as UTC ISO 8601 with milliseconds.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>
#include <string_view>

namespace chaff::timeutil {

// 2024-12-29T00:00:00Z fell on a Sunday; the default simulation origin below is
// the Monday after it so hour-of-week bin 0 is Monday 00:00 UTC.
inline constexpr double kDefaultOrigin = 1735516800.0;  // 2024-12-30T00:00:00Z

inline constexpr int days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int>(doe) - 719468;
}

inline std::int64_t utc_seconds(int y, int mo, int d, int h, int mi, int s) {
  return static_cast<std::int64_t>(days_from_civil(y, mo, d)) * 86400 + h * 3600 + mi * 60 + s;
}

struct CivilTime {
  int year, month, day, hour, minute, second;
};

inline CivilTime civil_from_seconds(std::int64_t t) {
  std::int64_t days = t / 86400;
  std::int64_t rem = t % 86400;
  if (rem < 0) {
    rem += 86400;
    days -= 1;
  }
  // Inverse of days_from_civil.
  std::int64_t z = days + 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  CivilTime c;
  c.year = static_cast<int>(y + (m <= 2));
  c.month = static_cast<int>(m);
  c.day = static_cast<int>(d);
  c.hour = static_cast<int>(rem / 3600);
  c.minute = static_cast<int>((rem % 3600) / 60);
  c.second = static_cast<int>(rem % 60);
  return c;
}

inline std::string format_iso8601(double t) {
  double floor_s = std::floor(t);
  int millis = static_cast<int>(std::llround((t - floor_s) * 1000.0));
  std::int64_t secs = static_cast<std::int64_t>(floor_s);
  if (millis >= 1000) {
    millis -= 1000;
    secs += 1;
  }
  CivilTime c = civil_from_seconds(secs);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", c.year, c.month, c.day, c.hour,
                c.minute, c.second, millis);
  return buf;
}

inline double parse_iso8601(std::string_view s) {
  int y, mo, d, h, mi;
  double sec = 0.0;
  char tz[8] = {0};
  std::string tmp(s);
  int got = std::sscanf(tmp.c_str(), "%d-%d-%dT%d:%d:%lf%7s", &y, &mo, &d, &h, &mi, &sec, tz);
  if (got < 6) {
    got = std::sscanf(tmp.c_str(), "%d-%d-%d %d:%d:%lf%7s", &y, &mo, &d, &h, &mi, &sec, tz);
    if (got < 6) throw std::invalid_argument("parse_iso8601: bad timestamp: " + tmp);
  }
  double whole = std::floor(sec);
  double base = static_cast<double>(utc_seconds(y, mo, d, h, mi, static_cast<int>(whole))) + (sec - whole);
  // Numeric offsets like +02:00 / -0500; 'Z' or missing means UTC.
  if (tz[0] == '+' || tz[0] == '-') {
    int oh = 0, om = 0;
    if (std::sscanf(tz + 1, "%2d:%2d", &oh, &om) >= 1 || std::sscanf(tz + 1, "%2d%2d", &oh, &om) >= 1) {
      int sign = tz[0] == '-' ? -1 : 1;
      base -= sign * (oh * 3600 + om * 60);
    }
  }
  return base;
}

// RFC 822 / RFC 1123 dates as used by RSS pubDate: "Mon, 02 Jan 2006 15:04:05 GMT".
// Returns 0 when the string does not parse (the field is advisory metadata).
inline std::int64_t parse_rfc822(std::string_view s) {
  static const char* months = "JanFebMarAprMayJunJulAugSepOctNovDec";
  std::string tmp(s);
  char mon[8] = {0}, tz[16] = {0};
  int d = 0, y = 0, h = 0, mi = 0, sec = 0;
  const char* p = tmp.c_str();
  const char* comma = std::strchr(p, ',');
  if (comma) p = comma + 1;
  int got = std::sscanf(p, " %d %3s %d %d:%d:%d %15s", &d, mon, &y, &h, &mi, &sec, tz);
  if (got < 5) return 0;
  int month = 0;
  for (int i = 0; i < 12; ++i)
    if (std::strncmp(months + i * 3, mon, 3) == 0) month = i + 1;
  if (month == 0 || d < 1 || d > 31) return 0;
  if (y < 100) y += y < 70 ? 2000 : 1900;
  std::int64_t base = utc_seconds(y, month, d, h, mi, sec);
  if (tz[0] == '+' || tz[0] == '-') {
    int off = std::atoi(tz);
    int oh = off / 100, om = off % 100;
    base -= oh * 3600 + om * 60;
  } else if (std::strcmp(tz, "EST") == 0) {
    base += 5 * 3600;
  } else if (std::strcmp(tz, "EDT") == 0) {
    base += 4 * 3600;
  } else if (std::strcmp(tz, "CST") == 0) {
    base += 6 * 3600;
  } else if (std::strcmp(tz, "PST") == 0) {
    base += 8 * 3600;
  }
  // GMT/UT/UTC/Z and unknown zones fall through as UTC.
  return base;
}

}  // namespace chaff::timeutil
