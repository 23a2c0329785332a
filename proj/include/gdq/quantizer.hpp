#pragma once

#include "gdq/errors.hpp"
#include "gdq/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>

namespace gdq {

enum class ClipMode { static_max, moving_average };

/// Symmetric uniform quantizer state for one tensor.
///
/// Signed tensors are clipped to [-a, a] with step a / (2^(b-1) - 1);
/// unsigned (post-ReLU) tensors to [0, a] with step a / (2^b - 1).
struct QuantParams {
    int bits = 8;
    double clip = 0.0; ///< a; 0 until calibrated
    bool is_signed = true;
    ClipMode mode = ClipMode::static_max;
    double ema_decay = 0.9;

    bool calibrated() const noexcept { return clip > 0.0 && std::isfinite(clip); }

    /// Largest representable integer code.
    std::int64_t levels() const noexcept {
        return is_signed ? (std::int64_t{1} << (bits - 1)) - 1 : (std::int64_t{1} << bits) - 1;
    }

    double step() const noexcept { return clip / static_cast<double>(levels()); }
};

inline constexpr int kMinBits = 2;
inline constexpr int kMaxBits = 8;

/// Throws ContractError when bits are out of [2, 8] or the clip bound is unset.
void require_quantizable(const QuantParams& qp);

/// round(clip(x) / r_b) * r_b over a span, rounding half away from zero.
///
/// The product is evaluated as k * a / levels so lattice points such as 2/7
/// come out correctly rounded.
template <typename T>
void quantize_span(std::span<const T> in, std::span<T> out, const QuantParams& qp) {
    require_quantizable(qp);
    if (in.size() != out.size()) throw ContractError("quantize: span sizes differ");
    const double a = qp.clip;
    const double lo = qp.is_signed ? -a : 0.0;
    const double levels = static_cast<double>(qp.levels());
    for (std::size_t i = 0; i < in.size(); ++i) {
        const double x = std::clamp(static_cast<double>(in[i]), lo, a);
        const double k = std::round(x * levels / a);
        out[i] = static_cast<T>(k * a / levels);
    }
}

Tensor quantize_activation(const Tensor& x, const QuantParams& qp);

struct WeightQuantization {
    Tensor values;
    QuantParams params;
    bool degenerate = false; ///< all-zero input; clip forced to 1.0
};

/// Per-tensor static max-abs weight quantization.
WeightQuantization quantize_weights(const Tensor& w, int bits = 8);

struct CalibrationOutcome {
    QuantParams params;
    bool skipped_empty = false;
};

/// Updates the clip bound from a batch: max|x| (max x when unsigned) in
/// static_max mode, EMA with `ema_decay` in moving_average mode.
CalibrationOutcome calibrate_clip(QuantParams qp, const Tensor& x);

/// Max |x| (signed) or max(x, 0) (unsigned) over a tensor.
double clip_statistic(const Tensor& x, bool is_signed);

/// Straight-through gradient mask: 1 inside the clip range (boundary inclusive), 0 outside.
Tensor ste_passthrough_jacobian(const Tensor& x, const QuantParams& qp);

std::string to_string(ClipMode mode);
ClipMode clip_mode_from_string(const std::string& s);

} // namespace gdq
