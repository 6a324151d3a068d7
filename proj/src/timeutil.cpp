#include "shipfuse/timeutil.hpp"

#include <cctype>
#include <chrono>
#include <cstdio>

#include "shipfuse/csv.hpp"
#include "shipfuse/parse.hpp"

namespace shipfuse
{

std::optional<std::int64_t> parse_iso8601(std::string_view text)
{
  using namespace std::chrono;
  text = trim(text);
  // YYYY-MM-DD?hh:mm:ss
  if (text.size() < 19 || text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') ||
      text[13] != ':' || text[16] != ':') {
    return std::nullopt;
  }
  auto field = [&](std::size_t pos, std::size_t len) { return parse_number<int>(text.substr(pos, len)); };
  const auto y = field(0, 4), mo = field(5, 2), d = field(8, 2);
  const auto h = field(11, 2), mi = field(14, 2), s = field(17, 2);
  if (!y || !mo || !d || !h || !mi || !s) {
    return std::nullopt;
  }
  const year_month_day ymd{year{*y}, month{static_cast<unsigned>(*mo)}, day{static_cast<unsigned>(*d)}};
  if (!ymd.ok() || *h < 0 || *h > 23 || *mi < 0 || *mi > 59 || *s < 0 || *s > 60) {
    return std::nullopt;
  }
  std::size_t pos = 19;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
      ++pos;
    }
  }
  std::int64_t offset_s = 0;
  if (pos < text.size()) {
    const char z = text[pos];
    if (z == 'Z' && pos + 1 == text.size()) {
      // UTC
    } else if ((z == '+' || z == '-') && (text.size() == pos + 6 || text.size() == pos + 5)) {
      const auto oh = parse_number<int>(text.substr(pos + 1, 2));
      const auto om = parse_number<int>(text.substr(text.size() - 2, 2));
      if (!oh || !om) {
        return std::nullopt;
      }
      offset_s = (*oh * 3600 + *om * 60) * (z == '+' ? 1 : -1);
    } else {
      return std::nullopt;
    }
  }
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 86400 + *h * 3600 + *mi * 60 + *s - offset_s;
}

std::string format_iso8601(std::int64_t epoch_seconds)
{
  using namespace std::chrono;
  std::int64_t days = epoch_seconds / 86400;
  std::int64_t rem = epoch_seconds % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[32];
  std::snprintf(
    buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
    static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), static_cast<int>(rem / 3600),
    static_cast<int>((rem / 60) % 60), static_cast<int>(rem % 60));
  return buf;
}

std::optional<std::int64_t> parse_iso8601_ms(std::string_view text)
{
  const auto seconds = parse_iso8601(text);
  if (!seconds) {
    return std::nullopt;
  }
  text = trim(text);
  int ms = 0;
  if (text.size() > 19 && text[19] == '.') {
    int scale = 100;
    for (std::size_t pos = 20; pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos])); ++pos) {
      ms += (text[pos] - '0') * scale;
      scale /= 10;
    }
  }
  return *seconds * 1000 + ms;
}

std::string format_iso8601_ms(std::int64_t epoch_ms)
{
  std::int64_t s = epoch_ms / 1000;
  std::int64_t ms = epoch_ms % 1000;
  if (ms < 0) {
    ms += 1000;
    --s;
  }
  std::string out = format_iso8601(s);
  char frac[8];
  std::snprintf(frac, sizeof(frac), ".%03d", static_cast<int>(ms));
  out.insert(out.size() - 1, frac);
  return out;
}

}  // namespace shipfuse
