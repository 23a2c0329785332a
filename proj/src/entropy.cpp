#include "gdq/entropy.hpp"

#include "gdq/errors.hpp"

#include <algorithm>
#include <cmath>

namespace gdq {

void EntropyConfig::validate() const {
    if (bins < 2) throw ContractError("entropy needs at least 2 bins");
    if (!(bandwidth() > 0.0)) throw ContractError("entropy bandwidth must be positive");
    if (!(epsilon > 0.0)) throw ContractError("entropy epsilon must be positive");
}

std::string to_string(EntropyMode mode) {
    return mode == EntropyMode::bin_wise ? "bin" : "pixel";
}

EntropyMode entropy_mode_from_string(const std::string& s) {
    if (s == "bin" || s == "bin_wise") return EntropyMode::bin_wise;
    if (s == "pixel" || s == "pixel_wise") return EntropyMode::pixel_wise;
    throw ContractError("unknown entropy mode '" + s + "'");
}

namespace {

struct Level {
    float value;
    std::size_t count;
};

// Patches come from 8-bit images, so the distinct values are few; kernel rows
// are evaluated once per distinct value and weighted by multiplicity.
std::vector<Level> distinct_levels(std::span<const float> values) {
    std::vector<float> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<Level> levels;
    for (float v : sorted) {
        if (!levels.empty() && levels.back().value == v) {
            ++levels.back().count;
        } else {
            levels.push_back({v, 1});
        }
    }
    return levels;
}

void kernel_row(double x, const EntropyConfig& cfg, std::vector<double>& row) {
    const double sigma = cfg.bandwidth();
    const double inv = 1.0 / (2.0 * sigma * sigma);
    const double bins = static_cast<double>(cfg.bins);
    for (std::size_t j = 0; j < cfg.bins; ++j) {
        const double center = (static_cast<double>(j) + 0.5) / bins;
        const double r = x - center;
        row[j] = std::exp(-r * r * inv);
    }
}

double neg_xlogx(double p) { return p > 0.0 ? -p * std::log(p) : 0.0; }

} // namespace

std::vector<double> kernel_bin_distribution(std::span<const float> values,
                                            const EntropyConfig& cfg) {
    cfg.validate();
    std::vector<double> mass(cfg.bins, 0.0);
    std::vector<double> row(cfg.bins);
    for (const auto& level : distinct_levels(values)) {
        kernel_row(level.value, cfg, row);
        const double w = static_cast<double>(level.count);
        for (std::size_t j = 0; j < cfg.bins; ++j) mass[j] += w * row[j];
    }
    double total = 0.0;
    for (double m : mass) total += m;
    total += cfg.epsilon;
    for (double& m : mass) m /= total;
    return mass;
}

double entropy_of_values(std::span<const float> values, const EntropyConfig& cfg) {
    cfg.validate();
    if (values.empty()) throw ContractError("entropy of an empty patch");
    if (cfg.mode == EntropyMode::bin_wise) {
        double h = 0.0;
        for (double q : kernel_bin_distribution(values, cfg)) h += neg_xlogx(q);
        return std::max(h, 0.0);
    }
    const auto levels = distinct_levels(values);
    std::vector<double> row(cfg.bins);
    std::vector<double> pixel_mass(levels.size(), 0.0);
    double total = 0.0;
    for (std::size_t l = 0; l < levels.size(); ++l) {
        kernel_row(levels[l].value, cfg, row);
        double s = 0.0;
        for (double k : row) s += k;
        pixel_mass[l] = s;
        total += s * static_cast<double>(levels[l].count);
    }
    total += cfg.epsilon;
    double h = 0.0;
    for (std::size_t l = 0; l < levels.size(); ++l) {
        h += static_cast<double>(levels[l].count) * neg_xlogx(pixel_mass[l] / total);
    }
    return std::max(h, 0.0);
}

double patch_entropy(const Tensor& patch, const EntropyConfig& cfg) {
    if (patch.empty()) throw ContractError("entropy of an empty patch");
    if (patch.channels() == 1) return entropy_of_values(patch.values(), cfg);
    const Tensor luma = to_luma(patch);
    return entropy_of_values(luma.values(), cfg);
}

EntropyStats make_entropy_stats(std::vector<double> entropies, const EntropyConfig& cfg) {
    if (entropies.empty()) throw ContractError("entropy statistics need a non-empty corpus");
    EntropyStats stats;
    stats.corpus_order = entropies;
    stats.values = std::move(entropies);
    std::sort(stats.values.begin(), stats.values.end());
    stats.config = cfg;
    return stats;
}

EntropyStats build_entropy_stats(const std::function<bool(Tensor&)>& next,
                                 const EntropyConfig& cfg) {
    std::vector<double> entropies;
    Tensor patch;
    while (next(patch)) entropies.push_back(patch_entropy(patch, cfg));
    return make_entropy_stats(std::move(entropies), cfg);
}

EntropyStats build_entropy_stats(const std::vector<Tensor>& patches, const EntropyConfig& cfg) {
    std::vector<double> entropies;
    entropies.reserve(patches.size());
    for (const auto& p : patches) entropies.push_back(patch_entropy(p, cfg));
    return make_entropy_stats(std::move(entropies), cfg);
}

QuantilePoint quantile_index(const EntropyStats& stats, double fraction) {
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw ContractError("quantile fraction must lie in (0, 1)");
    }
    const std::size_t m = stats.count();
    if (m == 0) throw ContractError("quantile of empty statistics");
    // M * t can land a few ulps above an integer (10 * 0.3); snap those before ceil.
    const double product = static_cast<double>(m) * fraction;
    const double nearest = std::round(product);
    const double rank = std::fabs(product - nearest) <= 1e-9 * std::max(1.0, product)
                            ? nearest
                            : std::ceil(product);
    const auto index = std::clamp<std::size_t>(static_cast<std::size_t>(rank), 1, m);
    return {index, stats.values[index - 1]};
}

EntropyHistogram entropy_histogram(const EntropyStats& stats, std::size_t bins) {
    if (bins == 0) throw ContractError("histogram needs at least one bin");
    EntropyHistogram hist{stats.min(), stats.max(), std::vector<std::size_t>(bins, 0)};
    const double width = (hist.upper - hist.lower) / static_cast<double>(bins);
    for (double v : stats.values) {
        std::size_t b = width > 0.0 ? static_cast<std::size_t>((v - hist.lower) / width) : 0;
        ++hist.counts[std::min(b, bins - 1)];
    }
    return hist;
}

} // namespace gdq
