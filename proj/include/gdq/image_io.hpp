#pragma once

#include "gdq/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace gdq {

/// 8-bit interleaved image as stored on disk.
struct Image8 {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t channels = 0; ///< 1 (gray) or 3 (RGB)
    std::vector<std::uint8_t> pixels;
};

/// Reads PNG, binary PGM (P5) or binary PPM (P6); format chosen by file signature.
/// Alpha channels are dropped and gray+alpha becomes gray.
Image8 read_image8(const std::filesystem::path& path);

/// Writes by extension: .png, .pgm (1 channel) or .ppm (3 channels).
void write_image8(const std::filesystem::path& path, const Image8& image);

/// Tensor (1, C, H, W) with values = byte / 255.
Tensor image_to_tensor(const Image8& image);

/// Clamps to [0,1] and rounds to the nearest byte.
Image8 tensor_to_image(const Tensor& t);

Tensor load_image(const std::filesystem::path& path);
void save_image(const std::filesystem::path& path, const Tensor& t);

/// Image files (png/ppm/pgm) directly inside `dir`, sorted by file name.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

} // namespace gdq
