#pragma once

#include "gdq/entropy.hpp"
#include "gdq/plan.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace gdq {


/// Entropy-to-bit mapping parameters. `bit_codes` has one more entry than `thresholds`.
struct E2BConfig {
    std::vector<double> thresholds{0.5, 0.9};
    std::vector<BitCode> bit_codes{4, 5, 8};
    double gamma = 0.9997;

    void validate() const;
};

/// Entropy cutoffs resolved against corpus statistics.
struct CalibratedThresholds {
    std::vector<double> fractions;
    std::vector<double> cutoffs;
    std::vector<BitCode> bit_codes;
    std::size_t iterations = 0;
};

CalibratedThresholds resolve_thresholds(const EntropyStats& stats, const E2BConfig& cfg);

/// First code whose cutoff is >= entropy; entropies above every cutoff get the last code.
BitCode assign_bit(double entropy, const CalibratedThresholds& thr);

/// (E - min) / (max - min) over the mini-batch, clamped to [0,1]; 0.5 for a flat batch.
double normalize_entropy(double entropy, std::span<const double> batch);

/// One EMA step t' = t * gamma + Norm(E) * (1 - gamma), kept inside (0, 1).
double atc_update(double fraction, std::span<const double> batch, double entropy, double gamma);

/// Which entropy drives each calibration step.
enum class AtcSelect {
    per_patch_sequential, ///< leading patch of each mini-batch, in corpus order
    batch_mean,           ///< mean entropy of the mini-batch
};

std::string to_string(AtcSelect s);
AtcSelect atc_select_from_string(const std::string& s);

struct AtcOptions {
    std::size_t batch_size = 16;
    AtcSelect select = AtcSelect::per_patch_sequential;
    bool trace = false;
};

struct AtcResult {
    CalibratedThresholds thresholds;
    std::vector<std::vector<double>> trajectory; ///< fractions after each step (if traced)
};

/// One pass over the corpus in mini-batches, one EMA step per batch for every
/// threshold fraction, then resolution of the drifted fractions to cutoffs.
AtcResult calibrate_thresholds(const EntropyStats& stats, const E2BConfig& cfg,
                               const AtcOptions& options = {});


/// Replaces the bit of patches the controller left at `gbc_high_bit` with the entropy-mapped code.
std::vector<PatchPlan> refine_plan(std::vector<PatchPlan> plans, const CalibratedThresholds& thr,
                                   BitCode gbc_high_bit = 8);

} // namespace gdq
