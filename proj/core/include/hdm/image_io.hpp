#pragma once

#include <filesystem>

#include "hdm/classifier.hpp"

namespace hdm {

/// Decode an 8-bit PNG/JPEG/BMP file. Grayscale stays single-channel, color
/// becomes RGB; values map to [0,1].
RawImage load_image(const std::filesystem::path& path);

/// Write an image (values clamped to [0,1]) as an 8-bit PNG. One or three
/// channels.
void write_png(const std::filesystem::path& path, const Image& img);

/// Write a grid as an 8-bit grayscale PNG, values clamped to [0,1].
void write_png(const std::filesystem::path& path, const MaskGrid& map);

}  // namespace hdm
