#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

#include "mothscan/raster.hpp"

namespace mothscan {

/// Decoded image in its native channel layout.
using AnyImage = std::variant<GrayImage, ColorImage>;

enum class ImageFormat { png, pgm, ppm, unknown };

/// Sniffs the format from the leading bytes; the file extension is ignored.
ImageFormat detect_format(std::span<const std::uint8_t> head) noexcept;

/// Decodes PNG (8/16-bit, any color type) and binary PGM/PPM (P5/P6, maxval up
/// to 65535). Samples are rescaled to 0..255. Throws IoError on failure.
AnyImage decode_image(std::span<const std::uint8_t> bytes);
AnyImage read_image(const std::filesystem::path& path);

GrayImage as_gray(const AnyImage& img);
ColorImage as_color(const AnyImage& img);

/// 8-bit encoders; samples are rounded and clamped to 0..255.
std::vector<std::uint8_t> encode_png(const GrayImage& img);
std::vector<std::uint8_t> encode_png(const ColorImage& img);
std::vector<std::uint8_t> encode_pnm(const GrayImage& img);
std::vector<std::uint8_t> encode_pnm(const ColorImage& img);

void write_image(const std::filesystem::path& path, const AnyImage& img);

/// Scalar field stored as an 8-byte header (uint32 LE width, uint32 LE height)
/// followed by row-major float32 LE samples.
GrayImage read_float_raster(const std::filesystem::path& path);
void write_float_raster(const std::filesystem::path& path, const GrayImage& img);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
/// Writes through a temporary sibling file and renames it into place, so a
/// reader never observes a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace mothscan
