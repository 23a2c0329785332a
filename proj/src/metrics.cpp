#include "gdq/metrics.hpp"

#include "gdq/errors.hpp"
#include "gdq/nn.hpp"
#include "gdq/srnet.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace gdq {
namespace {

void require_same(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b)) throw ContractError(std::string(what) + ": tensor dims differ");
    if (a.empty()) throw ContractError(std::string(what) + ": empty tensors");
}

std::vector<double> gaussian_window(std::size_t size, double sigma) {
    std::vector<double> w(size);
    const double c = (static_cast<double>(size) - 1.0) / 2.0;
    double total = 0.0;
    for (std::size_t i = 0; i < size; ++i) {
        const double d = static_cast<double>(i) - c;
        w[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        total += w[i];
    }
    for (double& v : w) v /= total;
    return w;
}

// Separable 'valid' filtering of a single plane.
std::vector<double> filter_valid(const std::vector<double>& img, std::size_t h, std::size_t w,
                                 const std::vector<double>& k) {
    const std::size_t n = k.size();
    const std::size_t ow = w - n + 1;
    const std::size_t oh = h - n + 1;
    std::vector<double> tmp(h * ow, 0.0);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < ow; ++x) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += k[i] * img[y * w + x + i];
            tmp[y * ow + x] = s;
        }
    }
    std::vector<double> out(oh * ow, 0.0);
    for (std::size_t y = 0; y < oh; ++y) {
        for (std::size_t x = 0; x < ow; ++x) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += k[i] * tmp[(y + i) * ow + x];
            out[y * ow + x] = s;
        }
    }
    return out;
}

double ssim_plane(std::span<const float> pa, std::span<const float> pb, std::size_t h,
                  std::size_t w) {
    constexpr std::size_t kWindow = 11;
    constexpr double c1 = (0.01 * 1.0) * (0.01 * 1.0);
    constexpr double c2 = (0.03 * 1.0) * (0.03 * 1.0);
    auto ssim_term = [](double mx, double my, double vx, double vy, double cxy) {
        return ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) /
               ((mx * mx + my * my + c1) * (vx + vy + c2));
    };
    if (h < kWindow || w < kWindow) {
        const double n = static_cast<double>(h * w);
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < pa.size(); ++i) {
            mx += pa[i];
            my += pb[i];
        }
        mx /= n;
        my /= n;
        double vx = 0.0, vy = 0.0, cxy = 0.0;
        for (std::size_t i = 0; i < pa.size(); ++i) {
            vx += (pa[i] - mx) * (pa[i] - mx);
            vy += (pb[i] - my) * (pb[i] - my);
            cxy += (pa[i] - mx) * (pb[i] - my);
        }
        return ssim_term(mx, my, vx / n, vy / n, cxy / n);
    }
    const auto k = gaussian_window(kWindow, 1.5);
    std::vector<double> a(pa.begin(), pa.end());
    std::vector<double> b(pb.begin(), pb.end());
    std::vector<double> aa(a.size()), bb(a.size()), ab(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        aa[i] = a[i] * a[i];
        bb[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
    }
    const auto mu_a = filter_valid(a, h, w, k);
    const auto mu_b = filter_valid(b, h, w, k);
    const auto s_aa = filter_valid(aa, h, w, k);
    const auto s_bb = filter_valid(bb, h, w, k);
    const auto s_ab = filter_valid(ab, h, w, k);
    double total = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
        const double mx = mu_a[i];
        const double my = mu_b[i];
        total += ssim_term(mx, my, s_aa[i] - mx * mx, s_bb[i] - my * my, s_ab[i] - mx * my);
    }
    return total / static_cast<double>(mu_a.size());
}

} // namespace

double mean_squared_error(const Tensor& a, const Tensor& b) {
    require_same(a, b, "mse");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a.data()[i]) - b.data()[i];
        s += d * d;
    }
    return s / static_cast<double>(a.size());
}

PsnrResult psnr(const Tensor& a, const Tensor& b, double peak) {
    const double mse = mean_squared_error(a, b);
    if (mse == 0.0) return {std::numeric_limits<double>::infinity(), true};
    return {10.0 * std::log10(peak * peak / mse), false};
}

double ssim(const Tensor& a, const Tensor& b) {
    require_same(a, b, "ssim");
    const Tensor la = to_luma(a);
    const Tensor lb = to_luma(b);
    double total = 0.0;
    for (std::size_t n = 0; n < la.batch(); ++n) {
        total += ssim_plane(la.plane(n, 0), lb.plane(n, 0), la.height(), la.width());
    }
    return total / static_cast<double>(la.batch());
}

double l1_loss(const Tensor& a, const Tensor& b) {
    require_same(a, b, "l1");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += std::fabs(static_cast<double>(a.data()[i]) - b.data()[i]);
    }
    return s / static_cast<double>(a.size());
}

double fab(const std::vector<PatchPlan>& plans) {
    if (plans.empty()) throw ContractError("FAB of an empty plan list");
    double s = 0.0;
    for (const auto& p : plans) s += p.final_bit;
    return s / static_cast<double>(plans.size());
}

std::vector<LayerCost> conv_layer_costs(const QuantModel& model, std::size_t patch_height,
                                        std::size_t patch_width) {
    std::vector<LayerCost> costs;
    for (const auto& layer : model.layers) {
        const auto& d = layer.weight.dims();
        const std::size_t oh = conv_output_extent(patch_height, d[2], 1, d[2] / 2);
        const std::size_t ow = conv_output_extent(patch_width, d[3], 1, d[3] / 2);
        LayerCost c;
        c.name = layer.name;
        c.macs = static_cast<double>(oh * ow) * static_cast<double>(d[0] * d[1] * d[2] * d[3]);
        c.weight_count = static_cast<double>(layer.weight.size());
        c.params = c.weight_count + static_cast<double>(layer.bias.size());
        c.quantized = layer.quantized;
        costs.push_back(c);
    }
    return costs;
}

double patch_bitops(const std::vector<LayerCost>& layers, int activation_bits, int weight_bits) {
    double total = 0.0;
    for (const auto& l : layers) {
        const bool q = l.quantized && activation_bits != kFullPrecisionBits;
        total += l.macs * (q ? static_cast<double>(activation_bits) * weight_bits : 32.0 * 32.0);
    }
    return total;
}

BitopsSummary bitops(const std::vector<LayerCost>& layers, const std::vector<PatchPlan>& plans,
                     int weight_bits) {
    if (plans.empty()) throw ContractError("BitOPs of an empty plan list");
    BitopsSummary s;
    for (const auto& p : plans) s.per_patch_mean += patch_bitops(layers, p.final_bit, weight_bits);
    s.per_patch_mean /= static_cast<double>(plans.size());
    s.full_precision = patch_bitops(layers, kFullPrecisionBits);
    s.ratio = s.full_precision > 0.0 ? s.per_patch_mean / s.full_precision : 1.0;
    return s;
}

ParamsSummary params_summary(const std::vector<LayerCost>& layers, int weight_bits) {
    ParamsSummary s;
    for (const auto& l : layers) {
        s.full += l.params;
        const double bias = l.params - l.weight_count;
        s.effective += l.quantized ? l.weight_count * weight_bits / 32.0 + bias : l.params;
    }
    s.ratio = s.full > 0.0 ? s.effective / s.full : 1.0;
    return s;
}

std::string format_si(double value, int decimals) {
    static constexpr const char* suffix[] = {"", "K", "M", "G", "T", "P"};
    std::size_t i = 0;
    double divisor = 1.0;
    while (std::fabs(value / divisor) >= 1000.0 && i + 1 < std::size(suffix)) {
        divisor *= 1000.0;
        ++i;
    }
    return format_scaled(value, divisor, suffix[i], i == 0 ? 0 : decimals);
}

std::string format_scaled(double value, double divisor, const std::string& suffix, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, value / divisor);
    return buf + suffix;
}

std::string reduction_label(double value, double baseline) {
    if (!(baseline > 0.0)) throw ContractError("reduction baseline must be positive");
    const double reduction = 100.0 * (1.0 - value / baseline);
    char buf[64];
    if (std::fabs(reduction) < 0.05) {
        std::snprintf(buf, sizeof buf, "(0.0%%)");
    } else {
        std::snprintf(buf, sizeof buf, "(↓ %.1f%%)", reduction);
    }
    return buf;
}

std::string format_with_reduction(double value, double baseline) {
    return format_si(value) + " " + reduction_label(value, baseline);
}

} // namespace gdq
