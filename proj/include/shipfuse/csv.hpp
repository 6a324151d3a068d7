#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace shipfuse
{

/// Splits one CSV record (RFC 4180 quoting, no embedded newlines).
std::vector<std::string> split_csv_line(std::string_view line);

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);

}  // namespace shipfuse
