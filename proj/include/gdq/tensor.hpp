#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace gdq {

/// Dense rank-4 float tensor in (batch, channel, height, width) row-major order.
class Tensor {
public:
    Tensor() = default;
    Tensor(std::size_t batch, std::size_t channels, std::size_t height, std::size_t width,
           float fill = 0.0f);
    Tensor(std::array<std::size_t, 4> dims, std::vector<float> data);

    /// Convenience for 1-D test data: dims (1, 1, 1, n).
    static Tensor from_values(std::vector<float> values);

    const std::array<std::size_t, 4>& dims() const noexcept { return dims_; }
    std::size_t batch() const noexcept { return dims_[0]; }
    std::size_t channels() const noexcept { return dims_[1]; }
    std::size_t height() const noexcept { return dims_[2]; }
    std::size_t width() const noexcept { return dims_[3]; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<float> values() noexcept { return data_; }
    std::span<const float> values() const noexcept { return data_; }
    float* data() noexcept { return data_.data(); }
    const float* data() const noexcept { return data_.data(); }

    float& operator()(std::size_t n, std::size_t c, std::size_t h, std::size_t w) noexcept {
        return data_[((n * dims_[1] + c) * dims_[2] + h) * dims_[3] + w];
    }
    float operator()(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const noexcept {
        return data_[((n * dims_[1] + c) * dims_[2] + h) * dims_[3] + w];
    }

    /// View of one (n, c) plane.
    std::span<float> plane(std::size_t n, std::size_t c) noexcept;
    std::span<const float> plane(std::size_t n, std::size_t c) const noexcept;

    bool same_shape(const Tensor& other) const noexcept { return dims_ == other.dims_; }

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    std::array<std::size_t, 4> dims_{0, 0, 0, 0};
    std::vector<float> data_;
};

/// True when every element is finite.
bool all_finite(const Tensor& t) noexcept;

/// BT.601 luma (0.299 R + 0.587 G + 0.114 B) of a 3-channel tensor; 1-channel input is copied.
Tensor to_luma(const Tensor& t);

/// Crop of the (1, C, h, w) window at (row, col) from a batch-1 tensor.
Tensor crop(const Tensor& t, std::size_t row, std::size_t col, std::size_t height,
            std::size_t width);

} // namespace gdq
