#pragma once

#include "gdq/tensor.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace gdq {

/// How the Gaussian kernel masses are turned into a distribution.
enum class EntropyMode {
    bin_wise,   ///< q_j = sum_i k_ij / Z; H = -sum_j q_j log q_j
    pixel_wise, ///< P(x_i) = sum_j k_ij / Z; H = -sum_i P(x_i) log P(x_i)
};

struct EntropyConfig {
    std::size_t bins = 256;
    std::optional<double> sigma; ///< kernel bandwidth in value units; unset means 1 / bins
    double epsilon = 1e-12;
    EntropyMode mode = EntropyMode::bin_wise;

    double bandwidth() const noexcept {
        return sigma.value_or(1.0 / static_cast<double>(bins));
    }
    void validate() const;
};

std::string to_string(EntropyMode mode);
EntropyMode entropy_mode_from_string(const std::string& s);

/// Per-bin kernel masses normalised by the total (+epsilon), for values in [0,1].
std::vector<double> kernel_bin_distribution(std::span<const float> values,
                                            const EntropyConfig& cfg);

/// Kernel-density entropy (nats) of a single-channel value set.
double entropy_of_values(std::span<const float> values, const EntropyConfig& cfg);

/// Entropy of a patch; three-channel patches are reduced to BT.601 luma first.
double patch_entropy(const Tensor& patch, const EntropyConfig& cfg);

/// Ascending corpus entropies.
struct EntropyStats {
    std::vector<double> values; ///< sorted ascending
    std::vector<double> corpus_order; ///< same entropies in extraction order
    EntropyConfig config;

    std::size_t count() const noexcept { return values.size(); }
    double min() const { return values.front(); }
    double max() const { return values.back(); }
};

/// Sorts the entropies; keeps the unsorted stream for threshold calibration.
EntropyStats make_entropy_stats(std::vector<double> entropies, const EntropyConfig& cfg);

/// Entropy of each patch yielded by `next` (returns false when exhausted).
EntropyStats build_entropy_stats(const std::function<bool(Tensor&)>& next,
                                 const EntropyConfig& cfg);
EntropyStats build_entropy_stats(const std::vector<Tensor>& patches, const EntropyConfig& cfg);

struct QuantilePoint {
    std::size_t index = 0; ///< 1-based position in the sorted list
    double threshold = 0.0;
};

/// ceil(M * t) clamped to [1, M] and the entropy stored at that position.
QuantilePoint quantile_index(const EntropyStats& stats, double fraction);

/// Histogram of sorted entropies over `bins` equal-width intervals on [min, max].
struct EntropyHistogram {
    double lower = 0.0;
    double upper = 0.0;
    std::vector<std::size_t> counts;
};
EntropyHistogram entropy_histogram(const EntropyStats& stats, std::size_t bins);

} // namespace gdq
