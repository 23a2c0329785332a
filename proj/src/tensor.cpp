#include "gdq/tensor.hpp"

#include "gdq/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gdq {

Tensor::Tensor(std::size_t batch, std::size_t channels, std::size_t height, std::size_t width,
               float fill)
    : dims_{batch, channels, height, width}, data_(batch * channels * height * width, fill) {}

Tensor::Tensor(std::array<std::size_t, 4> dims, std::vector<float> data)
    : dims_(dims), data_(std::move(data)) {
    if (data_.size() != dims_[0] * dims_[1] * dims_[2] * dims_[3]) {
        throw ContractError("tensor data length " + std::to_string(data_.size()) +
                            " does not match product of dims");
    }
}

Tensor Tensor::from_values(std::vector<float> values) {
    const std::size_t n = values.size();
    return Tensor({1, 1, 1, n}, std::move(values));
}

std::span<float> Tensor::plane(std::size_t n, std::size_t c) noexcept {
    const std::size_t hw = dims_[2] * dims_[3];
    return {data_.data() + (n * dims_[1] + c) * hw, hw};
}

std::span<const float> Tensor::plane(std::size_t n, std::size_t c) const noexcept {
    const std::size_t hw = dims_[2] * dims_[3];
    return {data_.data() + (n * dims_[1] + c) * hw, hw};
}

bool all_finite(const Tensor& t) noexcept {
    return std::all_of(t.values().begin(), t.values().end(),
                       [](float v) { return std::isfinite(v); });
}

Tensor to_luma(const Tensor& t) {
    if (t.channels() == 1) return t;
    if (t.channels() != 3) {
        throw ContractError("luma conversion needs 1 or 3 channels, got " +
                            std::to_string(t.channels()));
    }
    Tensor out(t.batch(), 1, t.height(), t.width());
    for (std::size_t n = 0; n < t.batch(); ++n) {
        auto r = t.plane(n, 0);
        auto g = t.plane(n, 1);
        auto b = t.plane(n, 2);
        auto y = out.plane(n, 0);
        for (std::size_t i = 0; i < y.size(); ++i) {
            y[i] = static_cast<float>(0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i]);
        }
    }
    return out;
}

Tensor crop(const Tensor& t, std::size_t row, std::size_t col, std::size_t height,
            std::size_t width) {
    if (t.batch() != 1) throw ContractError("crop expects batch 1");
    if (row + height > t.height() || col + width > t.width()) {
        throw ContractError("crop window exceeds tensor bounds");
    }
    Tensor out(1, t.channels(), height, width);
    for (std::size_t c = 0; c < t.channels(); ++c) {
        for (std::size_t y = 0; y < height; ++y) {
            const float* src = t.data() + (c * t.height() + row + y) * t.width() + col;
            std::copy(src, src + width, &out(0, c, y, 0));
        }
    }
    return out;
}

} // namespace gdq
