#pragma once

#include "gdq/plan.hpp"
#include "gdq/tensor.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace gdq {

struct QuantModel;

struct PsnrResult {
    double db = 0.0;
    bool infinite = false;
};

PsnrResult psnr(const Tensor& a, const Tensor& b, double peak = 1.0);

/// Gaussian-window SSIM (11x11, sigma 1.5, K1 0.01, K2 0.03, peak 1) averaged
/// over valid windows; images smaller than the window use one global window.
/// Three-channel inputs are reduced to luma first.
double ssim(const Tensor& a, const Tensor& b);

double l1_loss(const Tensor& a, const Tensor& b);

double mean_squared_error(const Tensor& a, const Tensor& b);

/// Mean final bit over patches.
double fab(const std::vector<PatchPlan>& plans);

/// Cost of one convolution when producing a patch.
struct LayerCost {
    std::string name;
    double macs = 0.0;   ///< out_h * out_w * Cout * Cin * k^2
    double params = 0.0; ///< weights + biases
    double weight_count = 0.0;
    bool quantized = false;
};

std::vector<LayerCost> conv_layer_costs(const QuantModel& model, std::size_t patch_height,
                                        std::size_t patch_width);

/// BitOPs of one patch: quantized layers weigh MACs by activation_bits * weight_bits,
/// the rest by 32 * 32.
double patch_bitops(const std::vector<LayerCost>& layers, int activation_bits,
                    int weight_bits = 8);

struct BitopsSummary {
    double per_patch_mean = 0.0;
    double full_precision = 0.0;
    double ratio = 1.0;
};

BitopsSummary bitops(const std::vector<LayerCost>& layers, const std::vector<PatchPlan>& plans,
                     int weight_bits = 8);

struct ParamsSummary {
    double full = 0.0;      ///< float32 parameter count
    double effective = 0.0; ///< quantized weights counted at weight_bits / 32
    double ratio = 1.0;
};

ParamsSummary params_summary(const std::vector<LayerCost>& layers, int weight_bits = 8);

/// "(↓ 86.0%)" for a reduction against `baseline`; "(0.0%)" when unchanged.
std::string reduction_label(double value, double baseline);

/// Value with K/M/G/T suffix ("527.0T"); below 1000 prints without suffix.
std::string format_si(double value, int decimals = 1);

/// value / divisor with a fixed suffix ("486K").
std::string format_scaled(double value, double divisor, const std::string& suffix, int decimals);

/// format_si(value) followed by reduction_label, e.g. "73.6T (↓ 86.0%)".
std::string format_with_reduction(double value, double baseline);

} // namespace gdq
