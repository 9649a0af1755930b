#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "figac/grid.hpp"
#include "figac/levelset.hpp"
#include "figac/pipeline.hpp"

namespace figac::io {

/// Single-channel PNG contents. Color images are reduced to luminance.
struct GrayImage {
    Grid<std::uint16_t> samples;
    int bit_depth = 8;  ///< 8 or 16
};

struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;  ///< row-major, 3 bytes per pixel
};

GrayImage decode_png(const std::string& bytes);
GrayImage read_png(const std::filesystem::path& path);

std::string encode_png(const Grid<std::uint8_t>& gray);
std::string encode_png(const Grid<std::uint16_t>& gray);
std::string encode_png(const RgbImage& image);

void write_file(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

/// 8-bit PNGs are windowed gray levels. 16-bit samples map to HU = sample + hu_offset, read from a
/// `{"hu_offset": ..., "pixel_spacing": ...}` description passed in as JSON.
pipeline::InputImage to_input(const GrayImage& png, const nlohmann::json& sidecar);

/// Loads an image file; 16-bit files read their description from the sibling `.json` file.
pipeline::InputImage load_slice(const std::filesystem::path& path);

/// Nonzero samples become mask pixels.
Mask to_mask(const GrayImage& png);
Mask read_mask(const std::filesystem::path& path);

/// 0/255 rendering of a mask.
Grid<std::uint8_t> mask_image(const Mask& mask);

/// Gray levels rounded and clamped to [0, 255].
Grid<std::uint8_t> gray_image(const ScalarField& f);

/// Linear min-max rescaling to [0, 255]; a constant field maps to 0.
Grid<std::uint8_t> rescaled_image(const ScalarField& f);

/// Gray image with polylines drawn in red.
RgbImage overlay(const ScalarField& gray, const std::vector<levelset::Polyline>& contour);

/// Portable float map (little-endian, bottom row first).
void write_pfm(const std::filesystem::path& path, const ScalarField& f);
ScalarField read_pfm(const std::filesystem::path& path);

/// Lossless float64 raster used to persist level sets.
std::string encode_raster(const ScalarField& f);
ScalarField decode_raster(const std::string& bytes);

}  // namespace figac::io
