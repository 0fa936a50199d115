#include "storsim/sim_time.hpp"

#include <cstdio>

#include "storsim/errors.hpp"

namespace storsim {

namespace {

// Civil-date conversions (Howard Hinnant's algorithms), zero-offset epoch
// 1970-01-01.
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yr = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yr + (m <= 2));
}

}  // namespace

SimTime parse_sim_time(const std::string& text) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0;
  if (std::sscanf(text.c_str(), "%d-%d-%d %d:%d", &y, &mo, &d, &h, &mi) != 5 ||
      mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 ||
      mi > 59) {
    throw ConfigError("malformed datetime '" + text +
                      "' (expected YYYY-MM-DD HH:MM)");
  }
  return days_from_civil(y, mo, d) * kMinutesPerDay + h * 60 + mi;
}

std::string format_sim_time(SimTime t) {
  std::int64_t days = t / kMinutesPerDay;
  std::int64_t rem = t % kMinutesPerDay;
  if (rem < 0) {
    rem += kMinutesPerDay;
    days -= 1;
  }
  int y = 0, mo = 0, d = 0;
  civil_from_days(days, y, mo, d);
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d %02d:%02d", y, mo, d,
                static_cast<int>(rem / 60), static_cast<int>(rem % 60));
  return buf;
}

}  // namespace storsim
