#include "retriever/common/time.hpp"

#include <cctype>
#include <cstdio>

#include "retriever/common/clock.hpp"

namespace retriever {

namespace {

using namespace std::chrono;

// Reads exactly `width` digits starting at `pos`.
std::optional<int> read_digits(std::string_view s, std::size_t pos, std::size_t width) {
  if (pos + width > s.size()) return std::nullopt;
  int v = 0;
  for (std::size_t i = pos; i < pos + width; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return std::nullopt;
    v = v * 10 + (s[i] - '0');
  }
  return v;
}

}  // namespace

std::shared_ptr<Clock> system_clock() {
  static auto clock = std::make_shared<SystemClock>();
  return clock;
}

std::optional<sys_days> parse_date(std::string_view s) {
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  auto y = read_digits(s, 0, 4);
  auto m = read_digits(s, 5, 2);
  auto d = read_digits(s, 8, 2);
  if (!y || !m || !d) return std::nullopt;
  year_month_day ymd{year{*y}, month{static_cast<unsigned>(*m)}, day{static_cast<unsigned>(*d)}};
  if (!ymd.ok()) return std::nullopt;
  return sys_days{ymd};
}

std::string format_date(sys_days d) {
  year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::optional<Timestamp> parse_iso8601(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  auto day = parse_date(s);
  if (!day) return std::nullopt;
  Timestamp t = time_point_cast<Duration>(*day);
  if (s.size() == 10) return t;
  if (s[10] != 'T' && s[10] != 't' && s[10] != ' ') return std::nullopt;

  auto hh = read_digits(s, 11, 2);
  if (!hh || s.size() < 16 || s[13] != ':') return std::nullopt;
  auto mm = read_digits(s, 14, 2);
  if (!mm || *hh > 23 || *mm > 59) return std::nullopt;
  t += hours{*hh} + minutes{*mm};
  std::size_t pos = 16;
  if (pos < s.size() && s[pos] == ':') {
    auto ss = read_digits(s, pos + 1, 2);
    if (!ss || *ss > 60) return std::nullopt;
    t += seconds{*ss};
    pos += 3;
    if (pos < s.size() && (s[pos] == '.' || s[pos] == ',')) {
      ++pos;
      int scale = 100;
      int ms = 0;
      std::size_t start = pos;
      while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
        ms += (s[pos] - '0') * scale;
        scale /= 10;
        ++pos;
      }
      if (pos == start) return std::nullopt;
      t += milliseconds{ms};
    }
  }
  if (pos == s.size()) return t;
  if (s[pos] == 'Z' || s[pos] == 'z') return pos + 1 == s.size() ? std::optional{t} : std::nullopt;
  if (s[pos] != '+' && s[pos] != '-') return std::nullopt;
  int sign = s[pos] == '+' ? 1 : -1;
  auto oh = read_digits(s, pos + 1, 2);
  if (!oh) return std::nullopt;
  std::size_t mpos = pos + 3;
  if (mpos < s.size() && s[mpos] == ':') ++mpos;
  int om = 0;
  if (mpos < s.size()) {
    auto v = read_digits(s, mpos, 2);
    if (!v || mpos + 2 != s.size()) return std::nullopt;
    om = *v;
  }
  return t - sign * (hours{*oh} + minutes{om});
}

std::string format_iso8601(Timestamp t) {
  auto day = floor<days>(t);
  hh_mm_ss<Duration> tod{t - day};
  char buf[48];
  auto ms = tod.subseconds().count();
  auto date = format_date(day);
  if (ms != 0) {
    std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02d.%03dZ", date.c_str(), static_cast<int>(tod.hours().count()),
                  static_cast<int>(tod.minutes().count()), static_cast<int>(tod.seconds().count()),
                  static_cast<int>(ms));
  } else {
    std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02dZ", date.c_str(), static_cast<int>(tod.hours().count()),
                  static_cast<int>(tod.minutes().count()), static_cast<int>(tod.seconds().count()));
  }
  return buf;
}

}  // namespace retriever
