#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace shipfuse::ais
{

/// ITU-R M.1371 navigational status codes.
enum NavStatus : int {
  kUnderWayUsingEngine = 0,
  kAtAnchor = 1,
  kNotUnderCommand = 2,
  kRestrictedManoeuvrability = 3,
  kConstrainedByDraught = 4,
  kMoored = 5,
  kAground = 6,
  kEngagedInFishing = 7,
  kUnderWaySailing = 8,
  kAisSartActive = 14,
  kUndefined = 15,
};

/// Canonical label for a status code (0..15).
std::string_view nav_status_label(int code);

/// Status text (as found in Marine Cadastre exports) to code. Numeric text
/// passes through; empty or unknown text maps to 15.
int nav_status_from_text(std::string_view text);

struct AisRecord
{
  std::uint32_t mmsi = 0;
  std::int64_t timestamp = 0;  // UTC epoch seconds
  double lat = 0.0;
  double lon = 0.0;
  std::optional<double> sog;
  std::optional<double> cog;
  std::optional<double> heading;
  int nav_status = kUndefined;
  std::optional<double> length_m;
  std::optional<double> width_m;
  std::optional<int> vessel_type;
  std::optional<std::string> name;

  bool operator==(const AisRecord &) const = default;
};

/// Checks the record invariants; returns the violated rule or an empty string.
std::string validate(const AisRecord & r);

nlohmann::json to_json(const AisRecord & r);
AisRecord record_from_json(const nlohmann::json & j);

// ---------------------------------------------------------------------------
// Marine Cadastre CSV

struct CsvReject
{
  std::size_t line_no;
  std::string reason;
};

struct CsvParseResult
{
  std::vector<AisRecord> records;
  std::vector<CsvReject> rejects;  // capped at `reject_cap` entries
  std::size_t reject_count = 0;    // total, including those beyond the cap
  std::size_t data_rows = 0;
};

/// Header-driven parse. Throws ConfigError when a mandatory column is missing.
CsvParseResult parse_cadastre_csv(std::istream & in, std::size_t reject_cap = 10000);

// ---------------------------------------------------------------------------
// NMEA 0183 framing

struct AivdmFrame
{
  bool own_vessel = false;  // !AIVDO
  int fragment_count = 1;
  int fragment_index = 1;
  std::optional<int> message_id;
  std::optional<char> channel;
  std::string payload;
  int fill_bits = 0;
  unsigned checksum = 0;
};

/// XOR of every character strictly between the leading '!' and the '*'.
unsigned nmea_checksum(std::string_view body);

/// Throws FormatError for malformed framing and ChecksumError on mismatch.
AivdmFrame parse_nmea_sentence(std::string_view line);

// ---------------------------------------------------------------------------
// Payload bits

class BitVector
{
public:
  BitVector() = default;
  explicit BitVector(std::vector<bool> bits) : bits_(std::move(bits)) {}

  std::size_t size() const { return bits_.size(); }
  bool operator[](std::size_t i) const { return bits_[i]; }
  const std::vector<bool> & bits() const { return bits_; }

  std::uint32_t get_uint(std::size_t start, std::size_t len) const;
  std::int32_t get_int(std::size_t start, std::size_t len) const;
  /// Six-bit ASCII text, right-trimmed of '@' and spaces.
  std::string get_text(std::size_t start, std::size_t n_chars) const;

  bool operator==(const BitVector &) const = default;

private:
  std::vector<bool> bits_;
};

/// De-armors a payload; throws ArmorError on a character outside the alphabet.
BitVector decode_payload(std::string_view payload, int fill_bits);

/// Message type 1, 2 or 3. Sentinel values become absent fields.
struct PositionReport
{
  int message_type = 0;
  std::uint32_t mmsi = 0;
  int nav_status = kUndefined;
  std::optional<double> sog;
  std::optional<double> lat;
  std::optional<double> lon;
  std::optional<double> cog;
  std::optional<double> heading;
  int second = 60;
};

/// Message type 5.
struct StaticVoyage
{
  std::uint32_t mmsi = 0;
  std::uint32_t imo = 0;
  std::string callsign;
  std::string name;
  int ship_type = 0;
  int to_bow = 0;
  int to_stern = 0;
  int to_port = 0;
  int to_starboard = 0;
  double length_m() const { return to_bow + to_stern; }
  double width_m() const { return to_port + to_starboard; }
};

int message_type(const BitVector & bits);
PositionReport decode_position_report(const BitVector & bits);
StaticVoyage decode_static_voyage(const BitVector & bits);

/// Joins multi-fragment sentences. Partials are keyed on (message id, channel);
/// at most `window` partials are held, older ones are evicted and counted.
class FragmentAssembler
{
public:
  explicit FragmentAssembler(std::size_t window = 64) : window_(window) {}

  /// Returns the joined payload and fill bits once a message is complete.
  std::optional<std::pair<std::string, int>> push(const AivdmFrame & frame);

  std::size_t dropped() const { return dropped_; }
  std::size_t pending() const { return partials_.size(); }

private:
  struct Partial
  {
    int message_id;
    char channel;
    int count;
    int next_index;
    std::string payload;
  };
  std::size_t window_;
  std::size_t dropped_ = 0;
  std::deque<Partial> partials_;
};

struct NmeaStreamStats
{
  std::size_t lines = 0;
  std::size_t checksum_errors = 0;
  std::size_t format_errors = 0;
  std::size_t unsupported = 0;
  std::size_t no_position = 0;
  std::size_t dropped_fragments = 0;
};

/// Decodes a stream of AIVDM lines into records. A line may carry its receive
/// time either as a leading epoch-seconds token or in an NMEA 4.0 tag block
/// (`\c:<epoch>*hh\`); otherwise the previous line's time is reused. Static
/// data from type 5 is merged into later position reports of the same MMSI.
std::vector<AisRecord> parse_nmea_stream(std::istream & in, NmeaStreamStats * stats = nullptr,
                                         std::size_t window = 64);

}  // namespace shipfuse::ais
