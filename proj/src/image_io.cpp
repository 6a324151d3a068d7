#include "shipfuse/image_io.hpp"

#include <png.h>
#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "shipfuse/error.hpp"

namespace shipfuse::io
{

std::vector<std::uint8_t> read_file(const std::string & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path);
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string & path, std::span<const std::uint8_t> bytes)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot write " + path);
  }
  out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw IoError("short write to " + path);
  }
}

// ---------------------------------------------------------------- PNG

namespace
{

struct ReadCursor
{
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;
};

void png_read_from_span(png_structp png, png_bytep out, png_size_t n)
{
  auto * cur = static_cast<ReadCursor *>(png_get_io_ptr(png));
  if (cur->pos + n > cur->bytes.size()) {
    png_error(png, "truncated PNG");
  }
  std::memcpy(out, cur->bytes.data() + cur->pos, n);
  cur->pos += n;
}

void png_write_to_vector(png_structp png, png_bytep data, png_size_t n)
{
  auto * out = static_cast<std::vector<std::uint8_t> *>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + n);
}

void png_flush_noop(png_structp) {}

void png_error_to_exception(png_structp png, png_const_charp msg)
{
  auto * message = static_cast<std::string *>(png_get_error_ptr(png));
  *message = msg;
  png_longjmp(png, 1);
}

void png_warning_ignore(png_structp, png_const_charp) {}

}  // namespace

Image decode_png(std::span<const std::uint8_t> bytes)
{
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw DecodeError("not a PNG stream");
  }
  std::string message;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, png_error_to_exception, png_warning_ignore);
  png_infop info = png_create_info_struct(png);
  ReadCursor cursor{bytes, 0};
  Image image;
  std::vector<png_bytep> rows;
  std::vector<std::uint8_t> buffer;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DecodeError("PNG decode failed: " + message);
  }
  png_set_read_fn(png, &cursor, png_read_from_span);
  png_read_info(png, info);
  const int color_type = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) {
    png_set_palette_to_rgb(png);
  }
  if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (png_get_valid(png, info, PNG_INFO_tRNS)) {
    png_set_tRNS_to_alpha(png);
  }
  if (depth == 16) {
    png_set_swap(png);
  }
  png_read_update_info(png, info);
  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);
  const int out_depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * height);
  rows.resize(height);
  for (int y = 0; y < height; ++y) {
    rows[y] = buffer.data() + rowbytes * y;
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  image = Image(width, height, channels, out_depth);
  for (int y = 0; y < height; ++y) {
    const std::uint8_t * row = rows[y];
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) {
        const std::size_t i = static_cast<std::size_t>(x) * channels + c;
        image.bands[c].at(x, y) = out_depth == 16 ? static_cast<std::uint16_t>(row[2 * i] | (row[2 * i + 1] << 8)) : row[i];
      }
    }
  }
  return image;
}

Image read_png(const std::string & path)
{
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file(path);
  } catch (const IoError & e) {
    throw DecodeError(e.what());
  }
  return decode_png(bytes);
}

std::vector<std::uint8_t> encode_png(const Image & image)
{
  const int channels = image.channels();
  if (channels < 1 || channels > 4) {
    throw ConfigError("PNG supports 1-4 channels");
  }
  if (image.bit_depth != 8 && image.bit_depth != 16) {
    throw ConfigError("PNG output needs 8- or 16-bit samples");
  }
  static const int kColorType[] = {PNG_COLOR_TYPE_GRAY, PNG_COLOR_TYPE_GRAY_ALPHA, PNG_COLOR_TYPE_RGB,
                                   PNG_COLOR_TYPE_RGB_ALPHA};
  const int bytes_per_sample = image.bit_depth / 8;
  std::vector<std::uint8_t> row(static_cast<std::size_t>(image.width) * channels * bytes_per_sample);
  std::vector<std::uint8_t> out;
  std::string message;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, png_error_to_exception, png_warning_ignore);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG encode failed: " + message);
  }
  png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
  png_set_IHDR(png, info, image.width, image.height, image.bit_depth, kColorType[channels - 1], PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < channels; ++c) {
        const std::uint16_t v = image.bands[c].at(x, y);
        const std::size_t i = static_cast<std::size_t>(x) * channels + c;
        if (bytes_per_sample == 2) {
          row[2 * i] = static_cast<std::uint8_t>(v >> 8);
          row[2 * i + 1] = static_cast<std::uint8_t>(v & 0xff);
        } else {
          row[i] = static_cast<std::uint8_t>(std::min<std::uint16_t>(v, 255));
        }
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void write_png(const std::string & path, const Image & image)
{
  write_file(path, encode_png(image));
}

Mask read_mask_png(const std::string & path)
{
  const Image img = read_png(path);
  Mask mask(img.width, img.height);
  const auto & src = img.bands[0].data();
  auto & dst = mask.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = src[i] != 0 ? 1 : 0;
  }
  return mask;
}

void write_mask_png(const std::string & path, const Mask & mask)
{
  Image img(mask.width(), mask.height(), 1, 8);
  for (std::size_t i = 0; i < mask.data().size(); ++i) {
    img.bands[0].data()[i] = mask.data()[i] ? 255 : 0;
  }
  write_png(path, img);
}

// ---------------------------------------------------------------- TIFF

namespace
{

enum : std::uint16_t {
  kImageWidth = 256,
  kImageLength = 257,
  kBitsPerSample = 258,
  kCompression = 259,
  kPhotometric = 262,
  kStripOffsets = 273,
  kSamplesPerPixel = 277,
  kRowsPerStrip = 278,
  kStripByteCounts = 279,
  kPlanarConfig = 284,
  kPredictor = 317,
  kExtraSamples = 338,
  kSampleFormat = 339,
  kModelPixelScale = 33550,
  kModelTiepoint = 33922,
  kModelTransformation = 34264,
  kGeoKeyDirectory = 34735,
};

enum : std::uint16_t { kShort = 3, kLong = 4, kDouble = 12 };

constexpr std::uint16_t kGtRasterTypeKey = 1025;
constexpr std::uint16_t kGeographicTypeKey = 2048;
constexpr std::uint16_t kProjectedCsTypeKey = 3072;
constexpr std::uint16_t kRasterPixelIsPoint = 2;

class TiffReader
{
public:
  explicit TiffReader(std::span<const std::uint8_t> b) : bytes_(b)
  {
    if (b.size() < 8) {
      throw DecodeError("TIFF too short");
    }
    if (b[0] == 'I' && b[1] == 'I') {
      little_ = true;
    } else if (b[0] == 'M' && b[1] == 'M') {
      little_ = false;
    } else {
      throw DecodeError("bad TIFF byte order");
    }
    if (u16(2) != 42) {
      throw DecodeError("not a classic TIFF");
    }
  }

  std::uint16_t u16(std::size_t off) const
  {
    need(off, 2);
    return little_ ? static_cast<std::uint16_t>(bytes_[off] | (bytes_[off + 1] << 8))
                   : static_cast<std::uint16_t>((bytes_[off] << 8) | bytes_[off + 1]);
  }
  std::uint32_t u32(std::size_t off) const
  {
    need(off, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      const std::uint32_t byte = bytes_[off + (little_ ? i : 3 - i)];
      v |= byte << (8 * i);
    }
    return v;
  }
  double f64(std::size_t off) const
  {
    need(off, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      const std::uint64_t byte = bytes_[off + (little_ ? i : 7 - i)];
      v |= byte << (8 * i);
    }
    double d;
    std::memcpy(&d, &v, 8);
    return d;
  }
  void need(std::size_t off, std::size_t n) const
  {
    if (off + n > bytes_.size() || off + n < off) {
      throw DecodeError("TIFF offset out of range");
    }
  }
  bool little() const { return little_; }
  std::span<const std::uint8_t> bytes() const { return bytes_; }

private:
  std::span<const std::uint8_t> bytes_;
  bool little_ = true;
};

struct TagValues
{
  std::vector<std::uint32_t> ints;
  std::vector<double> doubles;
};

std::map<std::uint16_t, TagValues> read_ifd(const TiffReader & r)
{
  const std::uint32_t ifd = r.u32(4);
  const std::uint16_t n = r.u16(ifd);
  std::map<std::uint16_t, TagValues> tags;
  for (std::uint16_t i = 0; i < n; ++i) {
    const std::size_t e = ifd + 2 + 12u * i;
    const std::uint16_t tag = r.u16(e);
    const std::uint16_t type = r.u16(e + 2);
    const std::uint32_t count = r.u32(e + 4);
    std::size_t size = 0;
    switch (type) {
      case kShort:
        size = 2;
        break;
      case kLong:
        size = 4;
        break;
      case kDouble:
        size = 8;
        break;
      default:
        continue;  // tags of other types are not needed
    }
    const std::size_t total = size * count;
    const std::size_t data = total <= 4 ? e + 8 : r.u32(e + 8);
    r.need(data, total);
    TagValues v;
    for (std::uint32_t k = 0; k < count; ++k) {
      if (type == kShort) {
        v.ints.push_back(r.u16(data + 2 * k));
      } else if (type == kLong) {
        v.ints.push_back(r.u32(data + 4 * k));
      } else {
        v.doubles.push_back(r.f64(data + 8 * k));
      }
    }
    tags[tag] = std::move(v);
  }
  return tags;
}

std::uint32_t scalar(const std::map<std::uint16_t, TagValues> & tags, std::uint16_t tag, std::uint32_t fallback)
{
  const auto it = tags.find(tag);
  if (it == tags.end() || it->second.ints.empty()) {
    return fallback;
  }
  return it->second.ints.front();
}

std::vector<std::uint8_t> inflate_strip(std::span<const std::uint8_t> in, std::size_t expected)
{
  std::vector<std::uint8_t> out(expected);
  uLongf out_len = static_cast<uLongf>(expected);
  const int rc = uncompress(out.data(), &out_len, in.data(), static_cast<uLong>(in.size()));
  if (rc != Z_OK && rc != Z_BUF_ERROR) {
    throw DecodeError("TIFF deflate strip is corrupt");
  }
  if (out_len != expected) {
    throw DecodeError("TIFF deflate strip has the wrong size");
  }
  return out;
}

std::optional<geo::GeoRef> parse_georef(const std::map<std::uint16_t, TagValues> & tags)
{
  std::array<double, 6> t{};
  bool have_transform = false;
  if (auto it = tags.find(kModelTransformation); it != tags.end() && it->second.doubles.size() >= 16) {
    const auto & m = it->second.doubles;
    t = {m[0], m[1], m[3], m[4], m[5], m[7]};
    have_transform = true;
  } else {
    const auto scale = tags.find(kModelPixelScale);
    const auto tie = tags.find(kModelTiepoint);
    if (scale != tags.end() && tie != tags.end() && scale->second.doubles.size() >= 2 &&
        tie->second.doubles.size() >= 6) {
      const auto & s = scale->second.doubles;
      const auto & p = tie->second.doubles;
      t = {s[0], 0.0, p[3] - p[0] * s[0], 0.0, -s[1], p[4] + p[1] * s[1]};
      have_transform = true;
    }
  }
  if (!have_transform) {
    return std::nullopt;
  }
  int epsg = 0;
  if (auto it = tags.find(kGeoKeyDirectory); it != tags.end() && it->second.ints.size() >= 4) {
    const auto & k = it->second.ints;
    const std::size_t n_keys = k[3];
    for (std::size_t i = 0; i < n_keys && 4 + 4 * i + 3 < k.size(); ++i) {
      const std::uint32_t id = k[4 + 4 * i];
      const std::uint32_t location = k[4 + 4 * i + 1];
      const std::uint32_t value = k[4 + 4 * i + 3];
      if (location != 0) {
        continue;
      }
      if (id == kProjectedCsTypeKey) {
        epsg = static_cast<int>(value);
      } else if (id == kGeographicTypeKey && epsg == 0) {
        epsg = static_cast<int>(value);
      } else if (id == kGtRasterTypeKey && value == kRasterPixelIsPoint) {
        // Tiepoints name pixel centres; shift the origin to the pixel corner.
        t[2] -= 0.5 * (t[0] + t[1]);
        t[5] -= 0.5 * (t[3] + t[4]);
      }
    }
  }
  if (epsg == 0) {
    throw MissingGeoRef("GeoTIFF has a transform but no EPSG geokey");
  }
  return geo::GeoRef{epsg, t};
}

}  // namespace

TiffRaster decode_tiff(std::span<const std::uint8_t> bytes)
{
  const TiffReader r(bytes);
  const auto tags = read_ifd(r);
  const int width = static_cast<int>(scalar(tags, kImageWidth, 0));
  const int height = static_cast<int>(scalar(tags, kImageLength, 0));
  const int spp = static_cast<int>(scalar(tags, kSamplesPerPixel, 1));
  const int bps = static_cast<int>(scalar(tags, kBitsPerSample, 1));
  const auto compression = scalar(tags, kCompression, 1);
  const auto predictor = scalar(tags, kPredictor, 1);
  const auto rows_per_strip = std::min<std::uint32_t>(scalar(tags, kRowsPerStrip, height), height);
  if (width <= 0 || height <= 0) {
    throw DecodeError("TIFF without dimensions");
  }
  if (spp < 1 || spp > 4 || (bps != 8 && bps != 16)) {
    throw DecodeError("TIFF sample layout not supported");
  }
  if (scalar(tags, kPlanarConfig, 1) != 1 || scalar(tags, kSampleFormat, 1) != 1) {
    throw DecodeError("only chunky unsigned-integer TIFF is supported");
  }
  if (compression != 1 && compression != 8 && compression != 32946) {
    throw DecodeError("TIFF compression " + std::to_string(compression) + " not supported");
  }
  if (predictor != 1 && predictor != 2) {
    throw DecodeError("TIFF predictor not supported");
  }
  const auto offsets = tags.count(kStripOffsets) ? tags.at(kStripOffsets).ints : std::vector<std::uint32_t>{};
  const auto counts = tags.count(kStripByteCounts) ? tags.at(kStripByteCounts).ints : std::vector<std::uint32_t>{};
  const std::size_t n_strips = (height + rows_per_strip - 1) / rows_per_strip;
  if (offsets.size() != n_strips || counts.size() != n_strips) {
    throw DecodeError("TIFF strip tables are inconsistent");
  }
  const std::size_t bytes_per_sample = bps / 8;
  const std::size_t row_bytes = static_cast<std::size_t>(width) * spp * bytes_per_sample;
  std::vector<std::uint8_t> pixels;
  pixels.reserve(row_bytes * height);
  for (std::size_t s = 0; s < n_strips; ++s) {
    const std::size_t rows = std::min<std::size_t>(rows_per_strip, height - s * rows_per_strip);
    r.need(offsets[s], counts[s]);
    const auto raw = bytes.subspan(offsets[s], counts[s]);
    if (compression == 1) {
      if (raw.size() < rows * row_bytes) {
        throw DecodeError("TIFF strip truncated");
      }
      pixels.insert(pixels.end(), raw.begin(), raw.begin() + static_cast<std::ptrdiff_t>(rows * row_bytes));
    } else {
      const auto strip = inflate_strip(raw, rows * row_bytes);
      pixels.insert(pixels.end(), strip.begin(), strip.end());
    }
  }
  TiffRaster out;
  out.image = Image(width, height, spp, bps);
  for (int y = 0; y < height; ++y) {
    const std::uint8_t * row = pixels.data() + row_bytes * y;
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < spp; ++c) {
        const std::size_t i = static_cast<std::size_t>(x) * spp + c;
        std::uint16_t v = bps == 8 ? row[i]
                          : r.little() ? static_cast<std::uint16_t>(row[2 * i] | (row[2 * i + 1] << 8))
                                       : static_cast<std::uint16_t>((row[2 * i] << 8) | row[2 * i + 1]);
        if (predictor == 2 && x > 0) {
          v = static_cast<std::uint16_t>(v + out.image.bands[c].at(x - 1, y));
          if (bps == 8) {
            v &= 0xff;
          }
        }
        out.image.bands[c].at(x, y) = v;
      }
    }
  }
  out.georef = parse_georef(tags);
  return out;
}

TiffRaster read_tiff(const std::string & path)
{
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file(path);
  } catch (const IoError & e) {
    throw DecodeError(e.what());
  }
  return decode_tiff(bytes);
}

namespace
{

class TiffWriter
{
public:
  void u16(std::uint16_t v)
  {
    out.push_back(v & 0xff);
    out.push_back(v >> 8);
  }
  void u32(std::uint32_t v)
  {
    for (int i = 0; i < 4; ++i) {
      out.push_back((v >> (8 * i)) & 0xff);
    }
  }
  void f64(double d)
  {
    std::uint64_t v;
    std::memcpy(&v, &d, 8);
    for (int i = 0; i < 8; ++i) {
      out.push_back((v >> (8 * i)) & 0xff);
    }
  }
  std::vector<std::uint8_t> out;
};

struct PendingTag
{
  std::uint16_t tag;
  std::uint16_t type;
  std::vector<std::uint32_t> ints;
  std::vector<double> doubles;
  std::uint32_t count() const { return static_cast<std::uint32_t>(type == kDouble ? doubles.size() : ints.size()); }
  std::size_t byte_size() const { return count() * (type == kDouble ? 8u : type == kShort ? 2u : 4u); }
};

}  // namespace

std::vector<std::uint8_t> encode_tiff(const Image & image, const std::optional<geo::GeoRef> & georef, bool deflate)
{
  const int spp = image.channels();
  if (spp < 1 || spp > 4 || (image.bit_depth != 8 && image.bit_depth != 16)) {
    throw ConfigError("TIFF output needs 1-4 bands of 8 or 16 bits");
  }
  const std::size_t bytes_per_sample = image.bit_depth / 8;
  std::vector<std::uint8_t> pixels;
  pixels.reserve(static_cast<std::size_t>(image.width) * image.height * spp * bytes_per_sample);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < spp; ++c) {
        const std::uint16_t v = image.bands[c].at(x, y);
        pixels.push_back(v & 0xff);
        if (bytes_per_sample == 2) {
          pixels.push_back(v >> 8);
        }
      }
    }
  }
  if (deflate) {
    uLongf len = compressBound(static_cast<uLong>(pixels.size()));
    std::vector<std::uint8_t> packed(len);
    if (compress2(packed.data(), &len, pixels.data(), static_cast<uLong>(pixels.size()), 6) != Z_OK) {
      throw IoError("deflate failed");
    }
    packed.resize(len);
    pixels = std::move(packed);
  }

  std::vector<PendingTag> tags;
  tags.push_back({kImageWidth, kLong, {static_cast<std::uint32_t>(image.width)}, {}});
  tags.push_back({kImageLength, kLong, {static_cast<std::uint32_t>(image.height)}, {}});
  tags.push_back({kBitsPerSample, kShort, std::vector<std::uint32_t>(spp, image.bit_depth), {}});
  tags.push_back({kCompression, kShort, {deflate ? 8u : 1u}, {}});
  tags.push_back({kPhotometric, kShort, {spp >= 3 ? 2u : 1u}, {}});
  tags.push_back({kStripOffsets, kLong, {0}, {}});
  tags.push_back({kSamplesPerPixel, kShort, {static_cast<std::uint32_t>(spp)}, {}});
  tags.push_back({kRowsPerStrip, kLong, {static_cast<std::uint32_t>(image.height)}, {}});
  tags.push_back({kStripByteCounts, kLong, {static_cast<std::uint32_t>(pixels.size())}, {}});
  tags.push_back({kPlanarConfig, kShort, {1}, {}});
  if (spp == 2 || spp == 4) {
    tags.push_back({kExtraSamples, kShort, {2}, {}});
  }
  if (georef) {
    const auto & t = georef->transform;
    if (t[1] == 0.0 && t[3] == 0.0 && t[4] < 0.0) {
      tags.push_back({kModelPixelScale, kDouble, {}, {t[0], -t[4], 0.0}});
      tags.push_back({kModelTiepoint, kDouble, {}, {0, 0, 0, t[2], t[5], 0}});
    } else {
      tags.push_back({kModelTransformation, kDouble, {}, {t[0], t[1], 0, t[2], t[3], t[4], 0, t[5], 0, 0, 0, 0, 0, 0, 0, 1}});
    }
    const bool geographic = georef->epsg == 4326;
    const std::uint32_t model_type = geographic ? 2 : 1;
    tags.push_back({kGeoKeyDirectory, kShort,
                    {1, 1, 0, 3, 1024, 0, 1, model_type, 1025, 0, 1, 1, geographic ? kGeographicTypeKey : kProjectedCsTypeKey,
                     0, 1, static_cast<std::uint32_t>(georef->epsg)},
                    {}});
  }
  std::sort(tags.begin(), tags.end(), [](const PendingTag & a, const PendingTag & b) { return a.tag < b.tag; });

  // Layout: header | IFD | out-of-line tag data | strip.
  const std::size_t ifd_offset = 8;
  const std::size_t ifd_size = 2 + 12 * tags.size() + 4;
  std::size_t data_offset = ifd_offset + ifd_size;
  std::vector<std::size_t> value_offsets;
  for (const auto & t : tags) {
    value_offsets.push_back(data_offset);
    if (t.byte_size() > 4) {
      data_offset += (t.byte_size() + 1) & ~std::size_t{1};
    }
  }
  const std::size_t strip_offset = data_offset;
  for (auto & t : tags) {
    if (t.tag == kStripOffsets) {
      t.ints = {static_cast<std::uint32_t>(strip_offset)};
    }
  }

  TiffWriter w;
  w.out = {'I', 'I'};
  w.u16(42);
  w.u32(static_cast<std::uint32_t>(ifd_offset));
  w.u16(static_cast<std::uint16_t>(tags.size()));
  auto write_values = [&](const PendingTag & t) {
    if (t.type == kDouble) {
      for (double d : t.doubles) {
        w.f64(d);
      }
    } else {
      for (std::uint32_t v : t.ints) {
        t.type == kShort ? w.u16(static_cast<std::uint16_t>(v)) : w.u32(v);
      }
    }
  };
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const auto & t = tags[i];
    w.u16(t.tag);
    w.u16(t.type);
    w.u32(t.count());
    if (t.byte_size() > 4) {
      w.u32(static_cast<std::uint32_t>(value_offsets[i]));
    } else {
      const std::size_t before = w.out.size();
      write_values(t);
      while (w.out.size() < before + 4) {
        w.out.push_back(0);
      }
    }
  }
  w.u32(0);
  for (const auto & t : tags) {
    if (t.byte_size() > 4) {
      write_values(t);
      if (t.byte_size() % 2) {
        w.out.push_back(0);
      }
    }
  }
  w.out.insert(w.out.end(), pixels.begin(), pixels.end());
  return w.out;
}

void write_tiff(const std::string & path, const Image & image, const std::optional<geo::GeoRef> & georef, bool deflate)
{
  write_file(path, encode_tiff(image, georef, deflate));
}

TiffRaster read_raster(const std::string & path)
{
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file(path);
  } catch (const IoError & e) {
    throw DecodeError(e.what());
  }
  if (bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0) {
    return {decode_png(bytes), std::nullopt};
  }
  if (bytes.size() >= 4 && ((bytes[0] == 'I' && bytes[1] == 'I') || (bytes[0] == 'M' && bytes[1] == 'M'))) {
    return decode_tiff(bytes);
  }
  throw DecodeError("unrecognized image format: " + path);
}

}  // namespace shipfuse::io
