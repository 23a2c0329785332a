#include "gdq/patch.hpp"

#include "gdq/errors.hpp"

#include <string>

namespace gdq {

std::vector<std::size_t> axis_origins(std::size_t extent, std::size_t patch_size,
                                      std::size_t overlap) {
    if (patch_size == 0) throw ContractError("patch_size must be >= 1");
    if (overlap >= patch_size) throw ContractError("overlap must be smaller than patch_size");
    if (extent <= patch_size) return {0};
    const std::size_t step = patch_size - overlap;
    const std::size_t last = extent - patch_size;
    std::vector<std::size_t> origins;
    for (std::size_t o = 0; o < last; o += step) origins.push_back(o);
    origins.push_back(last);
    return origins;
}

PatchGrid make_patch_grid(std::size_t height, std::size_t width, std::size_t patch_size,
                          std::size_t overlap) {
    if (height == 0 || width == 0) throw ContractError("cannot tile an empty image");
    PatchGrid grid;
    grid.patch_size = patch_size;
    grid.overlap = overlap;
    grid.source_height = height;
    grid.source_width = width;
    if (height < patch_size || width < patch_size) {
        if (patch_size == 0) throw ContractError("patch_size must be >= 1");
        grid.degenerate = true;
        grid.origins.push_back({0, 0});
        return grid;
    }
    const auto rows = axis_origins(height, patch_size, overlap);
    const auto cols = axis_origins(width, patch_size, overlap);
    for (auto r : rows) {
        for (auto c : cols) grid.origins.push_back({r, c});
    }
    return grid;
}

PatchSet extract_patches(const Tensor& image, std::size_t patch_size, std::size_t overlap) {
    if (image.batch() != 1) throw ContractError("extract_patches expects batch 1");
    PatchSet set{make_patch_grid(image.height(), image.width(), patch_size, overlap), {}};
    set.patches.reserve(set.grid.origins.size());
    for (const auto& o : set.grid.origins) {
        set.patches.push_back(
            crop(image, o.row, o.col, set.grid.patch_height(), set.grid.patch_width()));
    }
    return set;
}

Tensor stitch_patches(const PatchGrid& grid, const std::vector<Tensor>& patches,
                      std::size_t scale) {
    if (patches.size() != grid.origins.size()) {
        throw ContractError("stitch: " + std::to_string(patches.size()) + " patches for " +
                            std::to_string(grid.origins.size()) + " grid origins");
    }
    if (patches.empty() || scale == 0) throw ContractError("stitch: nothing to stitch");
    const std::size_t ph = grid.patch_height() * scale;
    const std::size_t pw = grid.patch_width() * scale;
    const std::size_t channels = patches.front().channels();
    for (const auto& p : patches) {
        if (p.batch() != 1 || p.channels() != channels || p.height() != ph || p.width() != pw) {
            throw ContractError("stitch: patch shape does not match grid geometry");
        }
    }
    const std::size_t out_h = grid.source_height * scale;
    const std::size_t out_w = grid.source_width * scale;
    std::vector<double> sum(channels * out_h * out_w, 0.0);
    const auto counts = coverage_counts(grid, scale);

    for (std::size_t i = 0; i < patches.size(); ++i) {
        const std::size_t r0 = grid.origins[i].row * scale;
        const std::size_t c0 = grid.origins[i].col * scale;
        for (std::size_t c = 0; c < channels; ++c) {
            for (std::size_t y = 0; y < ph; ++y) {
                double* dst = &sum[(c * out_h + r0 + y) * out_w + c0];
                const float* src = patches[i].data() + (c * ph + y) * pw;
                for (std::size_t x = 0; x < pw; ++x) dst[x] += src[x];
            }
        }
    }
    Tensor out(1, channels, out_h, out_w);
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t p = 0; p < out_h * out_w; ++p) {
            out.data()[c * out_h * out_w + p] =
                static_cast<float>(sum[c * out_h * out_w + p] / static_cast<double>(counts[p]));
        }
    }
    return out;
}

std::vector<std::size_t> coverage_counts(const PatchGrid& grid, std::size_t scale) {
    const std::size_t out_h = grid.source_height * scale;
    const std::size_t out_w = grid.source_width * scale;
    const std::size_t ph = grid.patch_height() * scale;
    const std::size_t pw = grid.patch_width() * scale;
    std::vector<std::size_t> counts(out_h * out_w, 0);
    for (const auto& o : grid.origins) {
        for (std::size_t y = 0; y < ph; ++y) {
            for (std::size_t x = 0; x < pw; ++x) {
                ++counts[(o.row * scale + y) * out_w + o.col * scale + x];
            }
        }
    }
    return counts;
}

} // namespace gdq
