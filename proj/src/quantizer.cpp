#include "gdq/quantizer.hpp"

namespace gdq {

void require_quantizable(const QuantParams& qp) {
    if (qp.bits < kMinBits || qp.bits > kMaxBits) {
        throw ContractError("bit width " + std::to_string(qp.bits) + " outside [2, 8]");
    }
    if (!qp.calibrated()) throw ContractError("quantizer clip bound is not calibrated");
}

Tensor quantize_activation(const Tensor& x, const QuantParams& qp) {
    Tensor out(x.dims(), std::vector<float>(x.size()));
    quantize_span<float>(x.values(), out.values(), qp);
    return out;
}

WeightQuantization quantize_weights(const Tensor& w, int bits) {
    if (w.empty()) throw ContractError("cannot quantize an empty weight tensor");
    WeightQuantization result;
    result.params.bits = bits;
    result.params.is_signed = true;
    result.params.mode = ClipMode::static_max;
    result.params.clip = clip_statistic(w, true);
    if (result.params.clip == 0.0) {
        result.params.clip = 1.0;
        result.degenerate = true;
    }
    result.values = quantize_activation(w, result.params);
    return result;
}

double clip_statistic(const Tensor& x, bool is_signed) {
    double m = 0.0;
    for (float v : x.values()) {
        const double d = is_signed ? std::fabs(static_cast<double>(v)) : static_cast<double>(v);
        m = std::max(m, d);
    }
    return m;
}

CalibrationOutcome calibrate_clip(QuantParams qp, const Tensor& x) {
    if (x.empty()) return {qp, true};
    const double batch_max = clip_statistic(x, qp.is_signed);
    if (qp.mode == ClipMode::moving_average && qp.calibrated()) {
        qp.clip = qp.ema_decay * qp.clip + (1.0 - qp.ema_decay) * batch_max;
    } else {
        qp.clip = batch_max;
    }
    return {qp, false};
}

Tensor ste_passthrough_jacobian(const Tensor& x, const QuantParams& qp) {
    Tensor mask(x.dims(), std::vector<float>(x.size(), 0.0f));
    const double lo = qp.is_signed ? -qp.clip : 0.0;
    auto in = x.values();
    auto out = mask.values();
    for (std::size_t i = 0; i < in.size(); ++i) {
        const double v = in[i];
        out[i] = (v >= lo && v <= qp.clip) ? 1.0f : 0.0f;
    }
    return mask;
}

std::string to_string(ClipMode mode) {
    return mode == ClipMode::static_max ? "static_max" : "moving_average";
}

ClipMode clip_mode_from_string(const std::string& s) {
    if (s == "static_max") return ClipMode::static_max;
    if (s == "moving_average") return ClipMode::moving_average;
    throw ContractError("unknown clip mode '" + s + "'");
}

} // namespace gdq
