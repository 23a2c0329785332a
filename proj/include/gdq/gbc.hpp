#pragma once

#include "gdq/container.hpp"
#include "gdq/plan.hpp"
#include "gdq/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace gdq {

/// Granularity-bit controller weights.
///
/// Level k applies a 3x3 reflect-padded conv + ReLU; levels after the first
/// first halve the previous level with a 2x2 average pool. Each level has its
/// own group-norm affine. The gate is a linear map from the C*D pooled
/// statistics to N logits, one per candidate bit.
struct GbcModel {
    std::size_t in_channels = 3;
    std::size_t depth = 4;     ///< D granularity levels
    std::size_t channels = 16; ///< C features per level
    std::size_t groups = 4;
    double temperature = 1.0;
    std::vector<BitCode> candidate_bits{4, 6, 8};

    std::vector<Tensor> conv_weight;      ///< level k: (C, Cin_k, 3, 3)
    std::vector<std::vector<float>> conv_bias;
    std::vector<std::vector<float>> norm_scale;
    std::vector<std::vector<float>> norm_shift;
    Tensor gate_weight;                   ///< (1, 1, C*D, N)
    std::vector<float> gate_bias;         ///< empty or N entries

    std::size_t statistic_length() const noexcept { return channels * depth; }
    std::size_t candidates() const noexcept { return candidate_bits.size(); }
    /// Spatial dims of a controller input must be a multiple of this.
    std::size_t spatial_multiple() const noexcept { return std::size_t{1} << (depth - 1); }

    void validate() const;
};

struct GbcShape {
    std::size_t in_channels = 3;
    std::size_t depth = 4;
    std::size_t channels = 16;
    std::size_t groups = 4;
    double temperature = 1.0;
    std::vector<BitCode> candidate_bits{4, 6, 8};
};

/// Seeded He-style initialisation (untrained; for tests and demos).
GbcModel make_random_gbc(const GbcShape& shape, std::uint64_t seed);

/// Multi-granularity features Z_1 (finest) .. Z_D (coarsest).
std::vector<Tensor> encode_granularities(const Tensor& patch, const GbcModel& model);

/// Group-norm each level, pool to the coarsest resolution, concatenate, global-average.
std::vector<double> pool_and_squeeze(const std::vector<Tensor>& levels, const GbcModel& model);

/// g = W_g^T S (+ bias).
std::vector<double> gate_logits(const std::vector<double>& statistic, const GbcModel& model);

struct GateDecision {
    std::vector<double> logits;
    std::vector<double> noise;
    std::size_t index = 0;
    double score = 0.0;
    BitCode bit = 0;
};

/// Lowest index among the maxima.
std::size_t argmax_lowest(const std::vector<double>& v);

/// Softmax of v / tau (numerically stabilised).
std::vector<double> softmax(const std::vector<double>& v, double tau);

/// Standard Gumbel sample -log(-log u) with u clamped to [1e-12, 1 - 1e-12].
double gumbel_from_uniform(double u) noexcept;

/// Deterministic: argmax of the logits. Stochastic: argmax of logits + Gumbel noise
/// drawn from `seed`. Score is the tempered softmax at the chosen index.
GateDecision sample_gate(const std::vector<double>& logits, const GbcModel& model,
                         std::uint64_t seed, bool deterministic);

/// Crops (or edge-extends) a patch so both dims are multiples of the controller's requirement.
Tensor fit_for_controller(const Tensor& patch, const GbcModel& model);

/// One plan per patch; patch i samples from derive_stream(seed, i).
std::vector<PatchPlan> allocate_bits(const std::vector<Tensor>& patches, const GbcModel& model,
                                     bool deterministic, std::uint64_t seed);

/// Rescales each gate column so its logits over `patches` have zero mean and unit spread.
/// Columns whose logits are constant over the set only get their mean removed.
void standardize_gate(GbcModel& model, const std::vector<Tensor>& patches);

Container gbc_to_container(const GbcModel& model);
GbcModel gbc_from_container(const Container& c);
void save_gbc(const std::filesystem::path& path, const GbcModel& model);
GbcModel load_gbc(const std::filesystem::path& path);

} // namespace gdq
