#pragma once

#include "gdq/container.hpp"
#include "gdq/plan.hpp"
#include "gdq/quantizer.hpp"
#include "gdq/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace gdq {

struct SrArchitecture {
    std::size_t in_channels = 3;
    std::size_t features = 16;
    std::size_t blocks = 4;
    std::size_t scale = 2;

    void validate() const;
};

/// One 3x3 convolution of the reference network.
struct ConvLayer {
    std::string name;
    Tensor weight; ///< (Cout, Cin, 3, 3)
    std::vector<float> bias;
    bool quantized = false;
    QuantParams activation; ///< clip for the layer input; bit chosen per patch
    QuantParams weight_params; ///< filled by QuantModel::prepare
    Tensor quantized_weight;   ///< filled by QuantModel::prepare
    bool degenerate_weight = false;
};

/// Reference EDSR-style SR network with quantized residual body.
///
/// head conv (in -> F) | R x [conv, ReLU, conv, + skip] | tail conv (F -> in*s^2),
/// depth-to-space, plus a bicubic upsample of the input. Only the body convs are
/// quantized: their inputs at the per-patch activation bit, their weights at 8 bits.
struct QuantModel {
    SrArchitecture arch;
    std::vector<ConvLayer> layers; ///< head, body (2 per block), tail
    int weight_bits = 8;

    /// Recomputes the cached quantized weights; call after editing weights.
    void prepare();
    void validate() const;

    const ConvLayer& head() const { return layers.front(); }
    const ConvLayer& tail() const { return layers.back(); }
};

/// Seeded random weights; body kernels are scaled down so the untrained network
/// stays close to its bicubic skip.
QuantModel make_reference_model(const SrArchitecture& arch, std::uint64_t seed);

/// Activation bit that disables every quantizer.
inline constexpr int kFullPrecisionBits = 32;

/// Bit widths accepted by `forward_quantized`: [2, 8] or 32.
bool supported_activation_bits(int bits) noexcept;

/// Activation/weight bits seen by each quantized layer during one forward.
struct ForwardTrace {
    struct Entry {
        std::size_t layer = 0;
        int activation_bits = 0;
        int weight_bits = 0;
    };
    std::vector<Entry> entries;

    /// True when every quantized layer saw the same activation bit.
    bool layer_invariant() const noexcept;
};

/// Forward pass of one LR patch at a single activation bit-width; output clamped to [0,1].
Tensor forward_quantized(const QuantModel& model, const Tensor& patch, int bits,
                         ForwardTrace* trace = nullptr);

/// Calibrates each quantized layer's input clip from float forwards over `patches`.
void calibrate_activations(QuantModel& model, const std::vector<Tensor>& patches,
                           ClipMode mode = ClipMode::static_max, double ema_decay = 0.9);

Container model_to_container(const QuantModel& model);
QuantModel model_from_container(const Container& c);
void save_model(const std::filesystem::path& path, const QuantModel& model);
QuantModel load_model(const std::filesystem::path& path);

} // namespace gdq
