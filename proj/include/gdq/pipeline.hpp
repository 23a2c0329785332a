#pragma once

#include "gdq/e2b.hpp"
#include "gdq/entropy.hpp"
#include "gdq/gbc.hpp"
#include "gdq/metrics.hpp"
#include "gdq/patch.hpp"
#include "gdq/srnet.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace gdq {

struct PipelineOptions {
    std::size_t patch_size = 96;
    std::size_t overlap = 0;
    std::optional<int> force_bit; ///< uniform bit for every patch, bypassing GBC and E2B
    bool deterministic = true;
    std::uint64_t seed = 0;
    bool refine = true; ///< apply E2B to patches at the controller's highest bit
    EntropyConfig entropy;
};

struct PipelineResult {
    Tensor sr;
    PatchGrid grid;
    std::vector<PatchPlan> plans;
    std::size_t layer_invariance_violations = 0;
    std::size_t traced_layers = 0;
    double fab = 0.0;
    BitopsSummary bitops;
    ParamsSummary params;
    double runtime_seconds = 0.0;
};

/// Patch split, controller allocation, entropy refinement, per-patch quantized
/// forward and stitching. `thresholds` may be null when refinement is off or a
/// bit is forced.
PipelineResult run_pipeline(const QuantModel& model, const GbcModel& gbc,
                            const CalibratedThresholds* thresholds, const Tensor& image,
                            const PipelineOptions& options = {});

/// Stitched full-precision output with the same patch layout, used as the
/// quantization-fidelity reference when no ground truth is supplied.
Tensor run_full_precision(const QuantModel& model, const Tensor& image,
                          std::size_t patch_size = 96, std::size_t overlap = 0);

struct QualityMetrics {
    PsnrResult psnr;
    double ssim = 0.0;
    double l1 = 0.0;
};

/// PSNR and SSIM on luma, L1 over all channels.
QualityMetrics measure_quality(const Tensor& output, const Tensor& reference);

} // namespace gdq
