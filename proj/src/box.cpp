#include "shipfuse/box.hpp"

#include "shipfuse/error.hpp"

namespace shipfuse
{

std::string_view to_string(Curation c)
{
  switch (c) {
    case Curation::Accepted:
      return "accepted";
    case Curation::Rejected:
      return "rejected";
    case Curation::Auto:
      break;
  }
  return "auto";
}

Curation curation_from_string(std::string_view s)
{
  if (s == "auto") {
    return Curation::Auto;
  }
  if (s == "accepted" || s == "accept") {
    return Curation::Accepted;
  }
  if (s == "rejected" || s == "reject") {
    return Curation::Rejected;
  }
  throw FormatError("unknown curation state: " + std::string(s));
}

}  // namespace shipfuse
