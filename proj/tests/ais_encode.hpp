#pragma once

// Test-only AIS payload encoder: the inverse of decode_payload, used to build
// payloads with chosen field values and for round-trip properties.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace testing_support
{

class BitWriter
{
public:
  void put_uint(std::uint64_t v, int len)
  {
    for (int b = len - 1; b >= 0; --b) {
      bits.push_back((v >> b) & 1u);
    }
  }
  void put_int(std::int64_t v, int len) { put_uint(static_cast<std::uint64_t>(v) & ((1ull << len) - 1), len); }
  void put_text(const std::string & s, int n_chars)
  {
    for (int i = 0; i < n_chars; ++i) {
      int c = i < static_cast<int>(s.size()) ? s[i] : '@';
      put_uint(c >= 64 ? c - 64 : c, 6);
    }
  }
  void pad_to(std::size_t n)
  {
    while (bits.size() < n) {
      bits.push_back(false);
    }
  }
  std::vector<bool> bits;
};

inline char armor(int v)
{
  return static_cast<char>(v < 40 ? v + 48 : v + 56);
}

/// Returns (payload, fill_bits).
inline std::pair<std::string, int> encode_payload(const std::vector<bool> & bits)
{
  std::string out;
  const int fill = static_cast<int>((6 - bits.size() % 6) % 6);
  for (std::size_t i = 0; i < bits.size(); i += 6) {
    int v = 0;
    for (std::size_t k = 0; k < 6; ++k) {
      v = (v << 1) | ((i + k < bits.size() && bits[i + k]) ? 1 : 0);
    }
    out.push_back(armor(v));
  }
  return {out, fill};
}

inline std::string nmea_wrap(const std::string & payload, int fill, int count = 1, int index = 1,
                             const std::string & id = "", const std::string & channel = "A")
{
  std::string body = "AIVDM," + std::to_string(count) + "," + std::to_string(index) + "," + id + "," + channel + "," +
                     payload + "," + std::to_string(fill);
  unsigned x = 0;
  for (char c : body) {
    x ^= static_cast<unsigned char>(c);
  }
  static const char * hex = "0123456789ABCDEF";
  return "!" + body + "*" + hex[x >> 4] + hex[x & 15];
}

}  // namespace testing_support
