#pragma once

#include "gdq/tensor.hpp"

#include <cstddef>
#include <vector>

namespace gdq {

struct PatchOrigin {
    std::size_t row = 0;
    std::size_t col = 0;
    friend bool operator==(const PatchOrigin&, const PatchOrigin&) = default;
};

/// Layout of square patches over a source image.
///
/// Origins step by `patch_size - overlap` and the last row/column is shifted
/// back so the patch ends at the image border (shift-to-fit, no padding).
/// When the image is smaller than a patch in either dimension the grid holds
/// a single patch covering the whole image and `degenerate` is set.
struct PatchGrid {
    std::size_t patch_size = 0;
    std::size_t overlap = 0;
    std::size_t source_height = 0;
    std::size_t source_width = 0;
    bool degenerate = false;
    std::vector<PatchOrigin> origins; ///< row-major order

    std::size_t patch_height() const noexcept {
        return degenerate ? source_height : patch_size;
    }
    std::size_t patch_width() const noexcept { return degenerate ? source_width : patch_size; }
};

/// Origins along one axis of length `extent` for the given patch size and overlap.
std::vector<std::size_t> axis_origins(std::size_t extent, std::size_t patch_size,
                                      std::size_t overlap);

PatchGrid make_patch_grid(std::size_t height, std::size_t width, std::size_t patch_size,
                          std::size_t overlap = 0);

struct PatchSet {
    PatchGrid grid;
    std::vector<Tensor> patches;
};

PatchSet extract_patches(const Tensor& image, std::size_t patch_size, std::size_t overlap = 0);

/// Reassembles patches upscaled by `scale`; overlapping pixels are averaged.
Tensor stitch_patches(const PatchGrid& grid, const std::vector<Tensor>& patches,
                      std::size_t scale);

/// Number of patches covering each output pixel of `stitch_patches` at the given scale.
std::vector<std::size_t> coverage_counts(const PatchGrid& grid, std::size_t scale);

} // namespace gdq
