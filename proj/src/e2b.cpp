#include "gdq/e2b.hpp"

#include "gdq/errors.hpp"
#include "gdq/plan.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gdq {

void E2BConfig::validate() const {
    if (thresholds.empty()) throw ContractError("E2B needs at least one threshold");
    if (bit_codes.size() != thresholds.size() + 1) {
        throw ContractError("E2B needs exactly one more bit code than thresholds");
    }
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        if (!(thresholds[i] > 0.0 && thresholds[i] < 1.0)) {
            throw ContractError("E2B thresholds must lie in (0, 1)");
        }
        if (i > 0 && !(thresholds[i] > thresholds[i - 1])) {
            throw ContractError("E2B thresholds must be strictly increasing");
        }
    }
    if (!std::is_sorted(bit_codes.begin(), bit_codes.end())) {
        throw ContractError("E2B bit codes must be non-decreasing");
    }
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ContractError("EMA gamma must lie in (0, 1]");
}

CalibratedThresholds resolve_thresholds(const EntropyStats& stats, const E2BConfig& cfg) {
    cfg.validate();
    CalibratedThresholds thr;
    thr.fractions = cfg.thresholds;
    thr.bit_codes = cfg.bit_codes;
    for (double t : cfg.thresholds) thr.cutoffs.push_back(quantile_index(stats, t).threshold);
    return thr;
}

BitCode assign_bit(double entropy, const CalibratedThresholds& thr) {
    for (std::size_t k = 0; k < thr.cutoffs.size(); ++k) {
        if (entropy <= thr.cutoffs[k]) return thr.bit_codes[k];
    }
    return thr.bit_codes.back();
}

double normalize_entropy(double entropy, std::span<const double> batch) {
    if (batch.empty()) throw ContractError("threshold calibration needs a non-empty batch");
    const auto [lo, hi] = std::minmax_element(batch.begin(), batch.end());
    if (!(*hi > *lo)) return 0.5;
    return std::clamp((entropy - *lo) / (*hi - *lo), 0.0, 1.0);
}

double atc_update(double fraction, std::span<const double> batch, double entropy, double gamma) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ContractError("EMA gamma must lie in (0, 1]");
    const double updated = fraction * gamma + normalize_entropy(entropy, batch) * (1.0 - gamma);
    constexpr double margin = 1e-12;
    return std::clamp(updated, margin, 1.0 - margin);
}

std::string to_string(AtcSelect s) {
    return s == AtcSelect::per_patch_sequential ? "per-patch-sequential" : "batch-mean";
}

AtcSelect atc_select_from_string(const std::string& s) {
    if (s == "per-patch-sequential") return AtcSelect::per_patch_sequential;
    if (s == "batch-mean") return AtcSelect::batch_mean;
    throw ContractError("unknown ATC selection '" + s + "'");
}

AtcResult calibrate_thresholds(const EntropyStats& stats, const E2BConfig& cfg,
                               const AtcOptions& options) {
    cfg.validate();
    if (options.batch_size == 0) throw ContractError("calibration batch size must be >= 1");
    const auto& stream = stats.corpus_order.empty() ? stats.values : stats.corpus_order;
    std::vector<double> fractions = cfg.thresholds;
    AtcResult result;
    std::size_t steps = 0;
    for (std::size_t begin = 0; begin < stream.size(); begin += options.batch_size) {
        const std::size_t end = std::min(stream.size(), begin + options.batch_size);
        std::span<const double> batch(stream.data() + begin, end - begin);
        const double chosen =
            options.select == AtcSelect::batch_mean
                ? std::accumulate(batch.begin(), batch.end(), 0.0) /
                      static_cast<double>(batch.size())
                : batch.front();
        for (double& t : fractions) t = atc_update(t, batch, chosen, cfg.gamma);
        ++steps;
        if (options.trace) result.trajectory.push_back(fractions);
    }
    // EMA updates cannot reorder fractions that share one driving entropy,
    // but equal fractions are possible at the clamp; keep them non-decreasing.
    for (std::size_t i = 1; i < fractions.size(); ++i) {
        fractions[i] = std::max(fractions[i], fractions[i - 1]);
    }
    result.thresholds.fractions = fractions;
    result.thresholds.bit_codes = cfg.bit_codes;
    for (double t : fractions) {
        result.thresholds.cutoffs.push_back(quantile_index(stats, t).threshold);
    }
    result.thresholds.iterations = steps;
    return result;
}

std::vector<PatchPlan> refine_plan(std::vector<PatchPlan> plans, const CalibratedThresholds& thr,
                                   BitCode gbc_high_bit) {
    for (auto& p : plans) {
        p.final_bit = p.gbc_bit == gbc_high_bit ? assign_bit(p.entropy, thr) : p.gbc_bit;
    }
    return plans;
}

} // namespace gdq
