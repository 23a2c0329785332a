#include "gdq/pipeline.hpp"

#include "gdq/errors.hpp"
#include "gdq/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>

namespace gdq {

PipelineResult run_pipeline(const QuantModel& model, const GbcModel& gbc,
                            const CalibratedThresholds* thresholds, const Tensor& image,
                            const PipelineOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    if (options.force_bit && !supported_activation_bits(*options.force_bit)) {
        throw ContractError("unsupported forced bit width " + std::to_string(*options.force_bit));
    }
    auto set = extract_patches(image, options.patch_size, options.overlap);
    PipelineResult result;
    result.grid = set.grid;

    std::vector<double> entropies(set.patches.size());
    parallel_for(set.patches.size(), [&](std::size_t i) {
        entropies[i] = patch_entropy(set.patches[i], options.entropy);
    });

    if (options.force_bit) {
        result.plans.resize(set.patches.size());
        for (std::size_t i = 0; i < result.plans.size(); ++i) {
            result.plans[i].id = i;
            result.plans[i].gbc_bit = *options.force_bit;
            result.plans[i].final_bit = *options.force_bit;
            result.plans[i].gate_score = 1.0;
        }
    } else {
        result.plans = allocate_bits(set.patches, gbc, options.deterministic, options.seed);
    }
    for (std::size_t i = 0; i < result.plans.size(); ++i) {
        result.plans[i].origin = set.grid.origins[i];
        result.plans[i].entropy = entropies[i];
    }
    if (!options.force_bit && options.refine) {
        if (!thresholds) throw ContractError("entropy refinement needs calibrated thresholds");
        const BitCode high = *std::max_element(gbc.candidate_bits.begin(), gbc.candidate_bits.end());
        result.plans = refine_plan(std::move(result.plans), *thresholds, high);
    }
    for (const auto& p : result.plans) {
        if (!supported_activation_bits(p.final_bit)) {
            throw ContractError("plan assigns unsupported bit width " + std::to_string(p.final_bit));
        }
    }

    std::vector<Tensor> outputs(set.patches.size());
    std::atomic<std::size_t> violations{0};
    std::atomic<std::size_t> traced{0};
    parallel_for(set.patches.size(), [&](std::size_t i) {
        ForwardTrace trace;
        outputs[i] = forward_quantized(model, set.patches[i], result.plans[i].final_bit, &trace);
        traced += trace.entries.size();
        for (const auto& e : trace.entries) {
            if (e.activation_bits != result.plans[i].final_bit) ++violations;
        }
        if (!trace.layer_invariant()) ++violations;
    });
    result.sr = stitch_patches(set.grid, outputs, model.arch.scale);
    result.layer_invariance_violations = violations.load();
    result.traced_layers = traced.load();

    const auto costs =
        conv_layer_costs(model, set.grid.patch_height(), set.grid.patch_width());
    result.fab = fab(result.plans);
    result.bitops = bitops(costs, result.plans, model.weight_bits);
    result.params = params_summary(costs, model.weight_bits);
    result.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

Tensor run_full_precision(const QuantModel& model, const Tensor& image, std::size_t patch_size,
                          std::size_t overlap) {
    auto set = extract_patches(image, patch_size, overlap);
    std::vector<Tensor> outputs(set.patches.size());
    parallel_for(set.patches.size(), [&](std::size_t i) {
        outputs[i] = forward_quantized(model, set.patches[i], kFullPrecisionBits);
    });
    return stitch_patches(set.grid, outputs, model.arch.scale);
}

QualityMetrics measure_quality(const Tensor& output, const Tensor& reference) {
    QualityMetrics q;
    q.psnr = psnr(to_luma(output), to_luma(reference));
    q.ssim = ssim(output, reference);
    q.l1 = l1_loss(output, reference);
    return q;
}

} // namespace gdq
