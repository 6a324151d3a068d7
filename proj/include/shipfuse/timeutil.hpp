#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace shipfuse
{

/// Parses ISO-8601 (`YYYY-MM-DD[T ]hh:mm:ss[.fff][Z|+hh:mm]`) to UTC epoch
/// seconds; a missing zone means UTC.
std::optional<std::int64_t> parse_iso8601(std::string_view text);
std::string format_iso8601(std::int64_t epoch_seconds);

/// Millisecond variants; fractional digits beyond the third are truncated.
std::optional<std::int64_t> parse_iso8601_ms(std::string_view text);
std::string format_iso8601_ms(std::int64_t epoch_ms);

}  // namespace shipfuse
