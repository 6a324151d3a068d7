#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shipfuse/geo.hpp"
#include "shipfuse/image.hpp"

namespace shipfuse::io
{

/// PNG with 1-4 channels at 8 or 16 bits; palette and sub-byte gray are expanded to 8 bits.
Image decode_png(std::span<const std::uint8_t> bytes);
Image read_png(const std::string & path);
std::vector<std::uint8_t> encode_png(const Image & image);
void write_png(const std::string & path, const Image & image);

/// Single-band mask: any non-zero sample becomes 1.
Mask read_mask_png(const std::string & path);
void write_mask_png(const std::string & path, const Mask & mask);

struct TiffRaster
{
  Image image;
  std::optional<geo::GeoRef> georef;
};

/// Baseline strip TIFF, uncompressed or deflate, optional horizontal predictor,
/// with GeoTIFF pixel-scale/tiepoint/transformation tags and the EPSG geokeys.
TiffRaster decode_tiff(std::span<const std::uint8_t> bytes);
TiffRaster read_tiff(const std::string & path);
std::vector<std::uint8_t> encode_tiff(const Image & image, const std::optional<geo::GeoRef> & georef, bool deflate);
void write_tiff(const std::string & path, const Image & image, const std::optional<geo::GeoRef> & georef,
                bool deflate = true);

/// Dispatches on the file signature.
TiffRaster read_raster(const std::string & path);

std::vector<std::uint8_t> read_file(const std::string & path);
void write_file(const std::string & path, std::span<const std::uint8_t> bytes);

}  // namespace shipfuse::io
