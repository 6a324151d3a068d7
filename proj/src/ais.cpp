#include "shipfuse/ais.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <unordered_map>

#include "shipfuse/csv.hpp"
#include "shipfuse/error.hpp"
#include "shipfuse/parse.hpp"
#include "shipfuse/timeutil.hpp"

namespace shipfuse
{

ChecksumError::ChecksumError(unsigned c, unsigned s)
: Error([&] {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "NMEA checksum mismatch: computed %02X, stated %02X", c, s);
    return std::string(buf);
  }()),
  computed(c),
  stated(s)
{
}

ArmorError::ArmorError(std::size_t off, char c)
: Error("invalid armor character '" + std::string(1, c) + "' at offset " + std::to_string(off)),
  offset(off)
{
}

}  // namespace shipfuse

namespace shipfuse::ais
{

namespace
{

constexpr std::array<std::string_view, 16> kStatusLabels = {
  "under way using engine",
  "at anchor",
  "not under command",
  "restricted manoeuvrability",
  "constrained by her draught",
  "moored",
  "aground",
  "engaged in fishing",
  "under way sailing",
  "reserved for future amendment (HSC)",
  "reserved for future amendment (WIG)",
  "power-driven vessel towing astern",
  "power-driven vessel pushing ahead or towing alongside",
  "reserved for future use",
  "AIS-SART is active",
  "undefined",
};

// Lowercase, every run of non-alphanumerics collapsed to one space.
std::string normalize_label(std::string_view text)
{
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc)) {
      if (pending_space && !out.empty()) {
        out.push_back(' ');
      }
      pending_space = false;
      out.push_back(static_cast<char>(std::tolower(uc)));
    } else {
      pending_space = true;
    }
  }
  return out;
}

const std::unordered_map<std::string, int> & status_aliases()
{
  static const std::unordered_map<std::string, int> table = [] {
    std::unordered_map<std::string, int> t;
    for (int code = 0; code < 16; ++code) {
      t.emplace(normalize_label(kStatusLabels[code]), code);
    }
    const std::pair<const char *, int> extra[] = {
      {"underway using engine", 0},
      {"under way using engine", 0},
      {"underway", 0},
      {"anchored", 1},
      {"restricted maneuverability", 3},
      {"restricted manoeuverability", 3},
      {"constrained by draught", 4},
      {"constrained by draft", 4},
      {"fishing", 7},
      {"underway sailing", 8},
      {"sailing", 8},
      {"ais sart", 14},
      {"ais sart active", 14},
      {"not defined", 15},
      {"not defined default", 15},
      {"default", 15},
      {"unknown", 15},
    };
    for (const auto & [label, code] : extra) {
      t.emplace(label, code);
    }
    return t;
  }();
  return table;
}


int hex_digit(char c)
{
  if (c >= '0' && c <= '9') {
    return c - '0';
  }
  if (c >= 'A' && c <= 'F') {
    return c - 'A' + 10;
  }
  return -1;
}

}  // namespace

std::string_view nav_status_label(int code)
{
  if (code < 0 || code > 15) {
    return kStatusLabels[15];
  }
  return kStatusLabels[code];
}

int nav_status_from_text(std::string_view text)
{
  text = trim(text);
  if (text.empty()) {
    return kUndefined;
  }
  if (auto numeric = parse_number<int>(text)) {
    return *numeric;
  }
  const auto & table = status_aliases();
  if (auto it = table.find(normalize_label(text)); it != table.end()) {
    return it->second;
  }
  return kUndefined;
}

std::string validate(const AisRecord & r)
{
  if (r.mmsi > 999999999u) {
    return "mmsi out of range";
  }
  if (!(r.lat >= -90.0 && r.lat <= 90.0)) {
    return "lat out of range";
  }
  if (!(r.lon >= -180.0 && r.lon <= 180.0)) {
    return "lon out of range";
  }
  if (r.nav_status < 0 || r.nav_status > 15) {
    return "nav_status out of range";
  }
  if (r.length_m && !(*r.length_m >= 0.0)) {
    return "length negative";
  }
  if (r.width_m && !(*r.width_m >= 0.0)) {
    return "width negative";
  }
  return {};
}

nlohmann::json to_json(const AisRecord & r)
{
  auto opt = [](const auto & o) -> nlohmann::json {
    if (o) {
      return *o;
    }
    return nullptr;
  };
  return nlohmann::json{
    {"mmsi", r.mmsi},
    {"timestamp", r.timestamp},
    {"lat", r.lat},
    {"lon", r.lon},
    {"sog", opt(r.sog)},
    {"cog", opt(r.cog)},
    {"heading", opt(r.heading)},
    {"nav_status", r.nav_status},
    {"length_m", opt(r.length_m)},
    {"width_m", opt(r.width_m)},
    {"vessel_type", opt(r.vessel_type)},
    {"name", opt(r.name)},
  };
}

AisRecord record_from_json(const nlohmann::json & j)
{
  AisRecord r;
  r.mmsi = j.at("mmsi").get<std::uint32_t>();
  r.timestamp = j.at("timestamp").get<std::int64_t>();
  r.lat = j.at("lat").get<double>();
  r.lon = j.at("lon").get<double>();
  auto opt = [&](const char * key, auto & field) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) {
      field = it->get<typename std::remove_reference_t<decltype(field)>::value_type>();
    }
  };
  opt("sog", r.sog);
  opt("cog", r.cog);
  opt("heading", r.heading);
  r.nav_status = j.value("nav_status", static_cast<int>(kUndefined));
  opt("length_m", r.length_m);
  opt("width_m", r.width_m);
  opt("vessel_type", r.vessel_type);
  opt("name", r.name);
  if (auto why = validate(r); !why.empty()) {
    throw FormatError("invalid AIS record: " + why);
  }
  return r;
}

// ---------------------------------------------------------------------------

CsvParseResult parse_cadastre_csv(std::istream & in, std::size_t reject_cap)
{
  CsvParseResult result;
  std::string line;
  if (!std::getline(in, line)) {
    throw ConfigError("AIS CSV: missing header row");
  }
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
    line.erase(0, 3);
  }
  const auto header = split_csv_line(line);
  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) {
    column.emplace(to_lower(trim(header[i])), i);
  }
  std::string missing;
  for (const char * required : {"mmsi", "basedatetime", "lat", "lon"}) {
    if (!column.contains(required)) {
      missing += missing.empty() ? required : std::string(", ") + required;
    }
  }
  if (!missing.empty()) {
    throw ConfigError("AIS CSV: missing mandatory column(s): " + missing);
  }
  auto index_of = [&](const char * name) -> std::optional<std::size_t> {
    if (auto it = column.find(name); it != column.end()) {
      return it->second;
    }
    return std::nullopt;
  };
  const std::size_t c_mmsi = column["mmsi"], c_time = column["basedatetime"];
  const std::size_t c_lat = column["lat"], c_lon = column["lon"];
  const auto c_sog = index_of("sog"), c_cog = index_of("cog"), c_heading = index_of("heading");
  const auto c_status = index_of("status"), c_length = index_of("length"), c_width = index_of("width");
  const auto c_type = index_of("vesseltype"), c_name = index_of("vesselname");

  auto reject = [&](std::size_t line_no, std::string reason) {
    ++result.reject_count;
    if (result.rejects.size() < reject_cap) {
      result.rejects.push_back({line_no, std::move(reason)});
    }
  };

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    ++result.data_rows;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      reject(line_no, "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
      continue;
    }
    AisRecord r;
    const auto mmsi = parse_number<std::int64_t>(fields[c_mmsi]);
    if (!mmsi || *mmsi < 0 || *mmsi > 999999999) {
      reject(line_no, "mmsi invalid");
      continue;
    }
    r.mmsi = static_cast<std::uint32_t>(*mmsi);
    const auto ts = parse_iso8601(fields[c_time]);
    if (!ts) {
      reject(line_no, "timestamp invalid");
      continue;
    }
    r.timestamp = *ts;
    const auto lat = parse_number<double>(fields[c_lat]);
    const auto lon = parse_number<double>(fields[c_lon]);
    if (!lat) {
      reject(line_no, "lat not numeric");
      continue;
    }
    if (!lon) {
      reject(line_no, "lon not numeric");
      continue;
    }
    r.lat = *lat;
    r.lon = *lon;

    std::string bad;
    auto optional_number = [&](const std::optional<std::size_t> & col, const char * name) -> std::optional<double> {
      if (!col || trim(fields[*col]).empty()) {
        return std::nullopt;
      }
      auto v = parse_number<double>(fields[*col]);
      if (!v && bad.empty()) {
        bad = std::string(name) + " not numeric";
      }
      return v;
    };
    r.sog = optional_number(c_sog, "sog");
    r.cog = optional_number(c_cog, "cog");
    r.heading = optional_number(c_heading, "heading");
    if (r.heading && *r.heading == 511.0) {
      r.heading.reset();
    }
    r.length_m = optional_number(c_length, "length");
    r.width_m = optional_number(c_width, "width");
    if (auto t = optional_number(c_type, "vessel_type")) {
      r.vessel_type = static_cast<int>(*t);
    }
    if (!bad.empty()) {
      reject(line_no, bad);
      continue;
    }
    r.nav_status = c_status ? nav_status_from_text(fields[*c_status]) : static_cast<int>(kUndefined);
    if (c_name) {
      if (auto name = trim(fields[*c_name]); !name.empty()) {
        r.name = std::string(name);
      }
    }
    if (auto why = validate(r); !why.empty()) {
      reject(line_no, why);
      continue;
    }
    result.records.push_back(std::move(r));
  }
  return result;
}

// ---------------------------------------------------------------------------

unsigned nmea_checksum(std::string_view body)
{
  unsigned x = 0;
  for (char c : body) {
    x ^= static_cast<unsigned char>(c);
  }
  return x;
}

AivdmFrame parse_nmea_sentence(std::string_view line)
{
  line = trim(line);
  if (!(line.starts_with("!AIVDM") || line.starts_with("!AIVDO"))) {
    throw FormatError("not an AIVDM/AIVDO sentence");
  }
  const auto star = line.rfind('*');
  if (star == std::string_view::npos) {
    throw FormatError("missing checksum delimiter");
  }
  if (line.size() != star + 3) {
    throw FormatError("checksum must be exactly two hex digits");
  }
  const int hi = hex_digit(line[star + 1]);
  const int lo = hex_digit(line[star + 2]);
  if (hi < 0 || lo < 0) {
    throw FormatError("checksum is not uppercase hex");
  }
  const std::string_view body = line.substr(1, star - 1);
  const unsigned stated = static_cast<unsigned>(hi * 16 + lo);
  const unsigned computed = nmea_checksum(body);
  if (stated != computed) {
    throw ChecksumError(computed, stated);
  }

  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = body.find(',', start);
    fields.push_back(body.substr(start, comma == std::string_view::npos ? body.npos : comma - start));
    if (comma == std::string_view::npos) {
      break;
    }
    start = comma + 1;
  }
  if (fields.size() != 7) {
    throw FormatError("expected 7 fields, got " + std::to_string(fields.size()));
  }
  AivdmFrame f;
  f.own_vessel = fields[0] == "AIVDO";
  if (fields[0] != "AIVDM" && fields[0] != "AIVDO") {
    throw FormatError("unexpected talker/sentence id");
  }
  const auto count = parse_number<int>(fields[1]);
  const auto index = parse_number<int>(fields[2]);
  if (!count || !index || *count < 1 || *index < 1 || *index > *count) {
    throw FormatError("invalid fragment count/index");
  }
  f.fragment_count = *count;
  f.fragment_index = *index;
  if (!fields[3].empty()) {
    const auto id = parse_number<int>(fields[3]);
    if (!id || *id < 0) {
      throw FormatError("invalid sequential message id");
    }
    f.message_id = *id;
  }
  if (fields[4].size() > 1 || (fields[4].size() == 1 && fields[4][0] != 'A' && fields[4][0] != 'B')) {
    throw FormatError("invalid channel");
  }
  if (!fields[4].empty()) {
    f.channel = fields[4][0];
  }
  f.payload = std::string(fields[5]);
  const auto fill = parse_number<int>(fields[6]);
  if (!fill || *fill < 0 || *fill > 5) {
    throw FormatError("invalid fill bits");
  }
  f.fill_bits = *fill;
  f.checksum = stated;
  return f;
}

// ---------------------------------------------------------------------------

std::uint32_t BitVector::get_uint(std::size_t start, std::size_t len) const
{
  if (start + len > bits_.size()) {
    throw LengthError(
      "bit field [" + std::to_string(start) + ", " + std::to_string(start + len) + ") beyond payload of " +
      std::to_string(bits_.size()) + " bits");
  }
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < len; ++i) {
    v = (v << 1) | (bits_[start + i] ? 1u : 0u);
  }
  return v;
}

std::int32_t BitVector::get_int(std::size_t start, std::size_t len) const
{
  const std::uint32_t raw = get_uint(start, len);
  if (len > 0 && len < 32 && (raw & (1u << (len - 1)))) {
    return static_cast<std::int32_t>(raw) - static_cast<std::int32_t>(1u << len);
  }
  return static_cast<std::int32_t>(raw);
}

std::string BitVector::get_text(std::size_t start, std::size_t n_chars) const
{
  std::string out;
  out.reserve(n_chars);
  for (std::size_t i = 0; i < n_chars; ++i) {
    const auto v = get_uint(start + 6 * i, 6);
    out.push_back(static_cast<char>(v < 32 ? v + 64 : v));
  }
  while (!out.empty() && (out.back() == '@' || out.back() == ' ')) {
    out.pop_back();
  }
  return out;
}

BitVector decode_payload(std::string_view payload, int fill_bits)
{
  if (fill_bits < 0 || fill_bits > 5 || static_cast<std::size_t>(fill_bits) > 6 * payload.size()) {
    throw FormatError("invalid fill bit count " + std::to_string(fill_bits));
  }
  std::vector<bool> bits;
  bits.reserve(6 * payload.size());
  for (std::size_t i = 0; i < payload.size(); ++i) {
    const int c = static_cast<unsigned char>(payload[i]);
    if (c < 48 || c > 119 || (c >= 88 && c <= 95)) {
      throw ArmorError(i, payload[i]);
    }
    int v = c - 48;
    if (v > 40) {
      v -= 8;
    }
    for (int b = 5; b >= 0; --b) {
      bits.push_back((v >> b) & 1);
    }
  }
  bits.resize(bits.size() - fill_bits);
  return BitVector(std::move(bits));
}

int message_type(const BitVector & bits)
{
  return static_cast<int>(bits.get_uint(0, 6));
}

PositionReport decode_position_report(const BitVector & bits)
{
  const int type = message_type(bits);
  if (type < 1 || type > 3) {
    throw Unsupported("message type " + std::to_string(type) + " is not a class A position report");
  }
  if (bits.size() < 168) {
    throw LengthError("position report needs 168 bits, got " + std::to_string(bits.size()));
  }
  PositionReport p;
  p.message_type = type;
  p.mmsi = bits.get_uint(8, 30);
  p.nav_status = static_cast<int>(bits.get_uint(38, 4));
  if (const auto sog = bits.get_uint(50, 10); sog != 1023) {
    p.sog = sog / 10.0;
  }
  if (const auto lon = bits.get_int(61, 28); lon != 181 * 600000) {
    p.lon = lon / 600000.0;
  }
  if (const auto lat = bits.get_int(89, 27); lat != 91 * 600000) {
    p.lat = lat / 600000.0;
  }
  if (const auto cog = bits.get_uint(116, 12); cog != 3600) {
    p.cog = cog / 10.0;
  }
  if (const auto heading = bits.get_uint(128, 9); heading != 511) {
    p.heading = heading;
  }
  p.second = static_cast<int>(bits.get_uint(137, 6));
  return p;
}

StaticVoyage decode_static_voyage(const BitVector & bits)
{
  const int type = message_type(bits);
  if (type != 5) {
    throw Unsupported("message type " + std::to_string(type) + " is not static and voyage data");
  }
  // 424 bits nominal; 420-bit variants omit the DTE flag and spare bits.
  if (bits.size() < 420) {
    throw LengthError("static/voyage report needs 420 bits, got " + std::to_string(bits.size()));
  }
  StaticVoyage s;
  s.mmsi = bits.get_uint(8, 30);
  s.imo = bits.get_uint(40, 30);
  s.callsign = bits.get_text(70, 7);
  s.name = bits.get_text(112, 20);
  s.ship_type = static_cast<int>(bits.get_uint(232, 8));
  s.to_bow = static_cast<int>(bits.get_uint(240, 9));
  s.to_stern = static_cast<int>(bits.get_uint(249, 9));
  s.to_port = static_cast<int>(bits.get_uint(258, 6));
  s.to_starboard = static_cast<int>(bits.get_uint(264, 6));
  return s;
}

std::optional<std::pair<std::string, int>> FragmentAssembler::push(const AivdmFrame & frame)
{
  if (frame.fragment_count == 1) {
    return std::make_pair(frame.payload, frame.fill_bits);
  }
  const int id = frame.message_id.value_or(-1);
  const char channel = frame.channel.value_or(' ');
  auto it = std::find_if(partials_.begin(), partials_.end(), [&](const Partial & p) {
    return p.message_id == id && p.channel == channel;
  });
  if (frame.fragment_index == 1) {
    if (it != partials_.end()) {
      partials_.erase(it);
      ++dropped_;
    }
    partials_.push_back({id, channel, frame.fragment_count, 2, frame.payload});
    if (partials_.size() > window_) {
      partials_.pop_front();
      ++dropped_;
    }
    return std::nullopt;
  }
  if (it == partials_.end()) {
    ++dropped_;
    return std::nullopt;
  }
  if (it->next_index != frame.fragment_index || it->count != frame.fragment_count) {
    partials_.erase(it);
    ++dropped_;
    return std::nullopt;
  }
  it->payload += frame.payload;
  ++it->next_index;
  if (frame.fragment_index == frame.fragment_count) {
    std::string payload = std::move(it->payload);
    partials_.erase(it);
    return std::make_pair(std::move(payload), frame.fill_bits);
  }
  return std::nullopt;
}

std::vector<AisRecord> parse_nmea_stream(std::istream & in, NmeaStreamStats * stats, std::size_t window)
{
  NmeaStreamStats local;
  NmeaStreamStats & st = stats ? *stats : local;
  FragmentAssembler assembler(window);
  std::unordered_map<std::uint32_t, StaticVoyage> statics;
  std::vector<AisRecord> out;
  std::int64_t current_time = 0;

  std::string line;
  while (std::getline(in, line)) {
    std::string_view rest = trim(line);
    if (rest.empty()) {
      continue;
    }
    ++st.lines;
    if (rest.front() == '\\') {
      const auto end = rest.find('\\', 1);
      if (end == std::string_view::npos) {
        ++st.format_errors;
        continue;
      }
      std::string_view tags = rest.substr(1, end - 1);
      if (auto star = tags.find('*'); star != std::string_view::npos) {
        tags = tags.substr(0, star);
      }
      std::size_t pos = 0;
      while (pos <= tags.size()) {
        const auto comma = tags.find(',', pos);
        const auto tag = tags.substr(pos, comma == std::string_view::npos ? tags.npos : comma - pos);
        if (tag.starts_with("c:")) {
          if (auto t = parse_number<std::int64_t>(tag.substr(2))) {
            current_time = *t;
          }
        }
        if (comma == std::string_view::npos) {
          break;
        }
        pos = comma + 1;
      }
      rest = rest.substr(end + 1);
    } else if (std::isdigit(static_cast<unsigned char>(rest.front()))) {
      const auto sep = rest.find_first_of(" \t,");
      if (sep == std::string_view::npos) {
        ++st.format_errors;
        continue;
      }
      if (auto t = parse_number<double>(rest.substr(0, sep))) {
        current_time = static_cast<std::int64_t>(std::floor(*t));
      }
      rest = trim(rest.substr(sep + 1));
    }

    AivdmFrame frame;
    try {
      frame = parse_nmea_sentence(rest);
    } catch (const ChecksumError &) {
      ++st.checksum_errors;
      continue;
    } catch (const FormatError &) {
      ++st.format_errors;
      continue;
    }
    auto joined = assembler.push(frame);
    st.dropped_fragments = assembler.dropped();
    if (!joined) {
      continue;
    }
    try {
      const BitVector bits = decode_payload(joined->first, joined->second);
      const int type = message_type(bits);
      if (type >= 1 && type <= 3) {
        const PositionReport p = decode_position_report(bits);
        if (!p.lat || !p.lon) {
          ++st.no_position;
          continue;
        }
        AisRecord r;
        r.mmsi = p.mmsi;
        r.timestamp = current_time;
        r.lat = *p.lat;
        r.lon = *p.lon;
        r.sog = p.sog;
        r.cog = p.cog;
        r.heading = p.heading;
        r.nav_status = p.nav_status;
        if (auto it = statics.find(p.mmsi); it != statics.end()) {
          const StaticVoyage & s = it->second;
          if (s.length_m() > 0) {
            r.length_m = s.length_m();
          }
          if (s.width_m() > 0) {
            r.width_m = s.width_m();
          }
          r.vessel_type = s.ship_type;
          if (!s.name.empty()) {
            r.name = s.name;
          }
        }
        if (validate(r).empty()) {
          out.push_back(std::move(r));
        } else {
          ++st.no_position;
        }
      } else if (type == 5) {
        StaticVoyage s = decode_static_voyage(bits);
        statics[s.mmsi] = std::move(s);
      } else {
        ++st.unsupported;
      }
    } catch (const LengthError &) {
      ++st.format_errors;
    } catch (const ArmorError &) {
      ++st.format_errors;
    } catch (const FormatError &) {
      ++st.format_errors;
    }
  }
  st.dropped_fragments = assembler.dropped();
  return out;
}

}  // namespace shipfuse::ais
