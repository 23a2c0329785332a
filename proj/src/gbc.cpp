#include "gdq/gbc.hpp"

#include "gdq/errors.hpp"
#include "gdq/nn.hpp"
#include "gdq/parallel.hpp"
#include "gdq/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gdq {

void GbcModel::validate() const {
    if (depth < 2) throw ContractError("controller depth must be >= 2");
    if (channels == 0 || groups == 0 || channels % groups != 0) {
        throw ContractError("controller channels must be a positive multiple of groups");
    }
    if (candidate_bits.empty()) throw ContractError("controller needs candidate bits");
    if (!(temperature > 0.0)) throw ContractError("controller temperature must be positive");
    if (conv_weight.size() != depth || conv_bias.size() != depth || norm_scale.size() != depth ||
        norm_shift.size() != depth) {
        throw ContractError("controller needs one encoder stage per granularity level");
    }
    for (std::size_t k = 0; k < depth; ++k) {
        const std::size_t cin = k == 0 ? in_channels : channels;
        const std::array<std::size_t, 4> want{channels, cin, 3, 3};
        if (conv_weight[k].dims() != want || conv_bias[k].size() != channels ||
            norm_scale[k].size() != channels || norm_shift[k].size() != channels) {
            throw ContractError("controller level " + std::to_string(k) + " has wrong shapes");
        }
    }
    const std::array<std::size_t, 4> gate{1, 1, statistic_length(), candidates()};
    if (gate_weight.dims() != gate) {
        throw ContractError("gate weight must be (C*D) x N = " +
                            std::to_string(statistic_length()) + " x " +
                            std::to_string(candidates()));
    }
    if (!gate_bias.empty() && gate_bias.size() != candidates()) {
        throw ContractError("gate bias must have one entry per candidate bit");
    }
}

GbcModel make_random_gbc(const GbcShape& shape, std::uint64_t seed) {
    GbcModel m;
    m.in_channels = shape.in_channels;
    m.depth = shape.depth;
    m.channels = shape.channels;
    m.groups = shape.groups;
    m.temperature = shape.temperature;
    m.candidate_bits = shape.candidate_bits;
    SplitMix64 rng(seed);
    for (std::size_t k = 0; k < m.depth; ++k) {
        const std::size_t cin = k == 0 ? m.in_channels : m.channels;
        Tensor w(m.channels, cin, 3, 3);
        const double bound = std::sqrt(6.0 / static_cast<double>(cin * 9));
        for (float& v : w.values()) v = static_cast<float>(rng.uniform(-bound, bound));
        m.conv_weight.push_back(std::move(w));
        m.conv_bias.emplace_back(m.channels, 0.0f);
        m.norm_scale.emplace_back(m.channels, 1.0f);
        std::vector<float> shift(m.channels);
        for (float& v : shift) v = static_cast<float>(rng.uniform(-0.1, 0.1));
        m.norm_shift.push_back(std::move(shift));
    }
    m.gate_weight = Tensor(1, 1, m.statistic_length(), m.candidates());
    const double bound = 1.0 / std::sqrt(static_cast<double>(m.statistic_length()));
    for (float& v : m.gate_weight.values()) v = static_cast<float>(rng.uniform(-bound, bound));
    m.validate();
    return m;
}

std::vector<Tensor> encode_granularities(const Tensor& patch, const GbcModel& model) {
    const std::size_t multiple = model.spatial_multiple();
    if (patch.height() % multiple != 0 || patch.width() % multiple != 0) {
        throw ContractError("controller input " + std::to_string(patch.height()) + "x" +
                            std::to_string(patch.width()) + " must be a multiple of " +
                            std::to_string(multiple) + " in both dimensions");
    }
    if (patch.channels() != model.in_channels) {
        throw ContractError("controller expects " + std::to_string(model.in_channels) +
                            " input channels");
    }
    std::vector<Tensor> levels;
    levels.reserve(model.depth);
    Tensor current = patch;
    for (std::size_t k = 0; k < model.depth; ++k) {
        if (k > 0) current = avg_pool2(current);
        current = conv2d(current, model.conv_weight[k], model.conv_bias[k]);
        relu_inplace(current);
        levels.push_back(current);
    }
    return levels;
}

std::vector<double> pool_and_squeeze(const std::vector<Tensor>& levels, const GbcModel& model) {
    if (levels.size() != model.depth) {
        throw ContractError("expected " + std::to_string(model.depth) + " granularity levels");
    }
    const Tensor& coarsest = levels.back();
    std::vector<double> statistic;
    statistic.reserve(model.statistic_length());
    for (std::size_t k = 0; k < levels.size(); ++k) {
        const Tensor normed =
            group_norm(levels[k], model.groups, model.norm_scale[k], model.norm_shift[k]);
        const std::size_t factor = normed.height() / coarsest.height();
        const Tensor pooled = avg_pool(normed, factor);
        for (std::size_t c = 0; c < pooled.channels(); ++c) {
            double sum = 0.0;
            for (float v : pooled.plane(0, c)) sum += v;
            statistic.push_back(sum / static_cast<double>(pooled.plane(0, c).size()));
        }
    }
    return statistic;
}

std::vector<double> gate_logits(const std::vector<double>& statistic, const GbcModel& model) {
    const std::size_t rows = model.statistic_length();
    const std::size_t cols = model.candidates();
    if (statistic.size() != rows) {
        throw ContractError("gate statistic has length " + std::to_string(statistic.size()) +
                            ", expected " + std::to_string(rows));
    }
    std::vector<double> g(cols, 0.0);
    for (std::size_t n = 0; n < cols; ++n) {
        double s = model.gate_bias.empty() ? 0.0 : model.gate_bias[n];
        for (std::size_t r = 0; r < rows; ++r) s += model.gate_weight(0, 0, r, n) * statistic[r];
        g[n] = s;
    }
    return g;
}

std::size_t argmax_lowest(const std::vector<double>& v) {
    if (v.empty()) throw ContractError("argmax of an empty vector");
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) best = i;
    }
    return best;
}

std::vector<double> softmax(const std::vector<double>& v, double tau) {
    if (!(tau > 0.0)) throw ContractError("softmax temperature must be positive");
    const double top = *std::max_element(v.begin(), v.end());
    std::vector<double> out(v.size());
    double total = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp((v[i] - top) / tau);
        total += out[i];
    }
    for (double& x : out) x /= total;
    return out;
}

double gumbel_from_uniform(double u) noexcept {
    u = std::clamp(u, 1e-12, 1.0 - 1e-12);
    return -std::log(-std::log(u));
}

GateDecision sample_gate(const std::vector<double>& logits, const GbcModel& model,
                         std::uint64_t seed, bool deterministic) {
    if (logits.size() != model.candidates()) {
        throw ContractError("gate expects " + std::to_string(model.candidates()) + " logits");
    }
    GateDecision d;
    d.logits = logits;
    d.noise.assign(logits.size(), 0.0);
    if (!deterministic) {
        SplitMix64 rng(seed);
        for (double& n : d.noise) n = gumbel_from_uniform(rng.uniform());
    }
    std::vector<double> perturbed(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) perturbed[i] = logits[i] + d.noise[i];
    d.index = argmax_lowest(perturbed);
    d.score = softmax(perturbed, model.temperature)[d.index];
    d.bit = model.candidate_bits[d.index];
    return d;
}

Tensor fit_for_controller(const Tensor& patch, const GbcModel& model) {
    const std::size_t m = model.spatial_multiple();
    if (patch.height() % m == 0 && patch.width() % m == 0) return patch;
    const std::size_t h = std::max(m, patch.height() / m * m);
    const std::size_t w = std::max(m, patch.width() / m * m);
    Tensor out(1, patch.channels(), h, w);
    for (std::size_t c = 0; c < patch.channels(); ++c) {
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                out(0, c, y, x) = patch(0, c, std::min(y, patch.height() - 1),
                                        std::min(x, patch.width() - 1));
            }
        }
    }
    return out;
}

std::vector<PatchPlan> allocate_bits(const std::vector<Tensor>& patches, const GbcModel& model,
                                     bool deterministic, std::uint64_t seed) {
    model.validate();
    std::vector<PatchPlan> plans(patches.size());
    parallel_for(patches.size(), [&](std::size_t i) {
        const Tensor input = fit_for_controller(patches[i], model);
        const auto statistic = pool_and_squeeze(encode_granularities(input, model), model);
        const auto decision =
            sample_gate(gate_logits(statistic, model), model, derive_stream(seed, i), deterministic);
        PatchPlan& p = plans[i];
        p.id = i;
        p.gbc_bit = decision.bit;
        p.final_bit = decision.bit;
        p.gate_score = decision.score;
        p.gate_index = decision.index;
    });
    return plans;
}

void standardize_gate(GbcModel& model, const std::vector<Tensor>& patches) {
    if (patches.empty()) throw ContractError("gate standardisation needs at least one patch");
    const std::size_t n = model.candidates();
    std::vector<std::vector<double>> logits(patches.size());
    parallel_for(patches.size(), [&](std::size_t i) {
        const Tensor fitted = fit_for_controller(patches[i], model);
        logits[i] = gate_logits(pool_and_squeeze(encode_granularities(fitted, model), model), model);
    });
    if (model.gate_bias.empty()) model.gate_bias.assign(n, 0.0f);
    const double count = static_cast<double>(patches.size());
    float* w = model.gate_weight.data();
    for (std::size_t k = 0; k < n; ++k) {
        double mean = 0.0;
        for (const auto& g : logits) mean += g[k];
        mean /= count;
        double var = 0.0;
        for (const auto& g : logits) var += (g[k] - mean) * (g[k] - mean);
        const double sd = std::sqrt(var / count);
        const double scale = sd > 1e-12 ? 1.0 / sd : 1.0;
        for (std::size_t i = 0; i < model.statistic_length(); ++i) {
            w[i * n + k] = static_cast<float>(w[i * n + k] * scale);
        }
        model.gate_bias[k] = static_cast<float>((model.gate_bias[k] - mean) * scale);
    }
}

Container gbc_to_container(const GbcModel& model) {
    model.validate();
    Container c;
    c.manifest["kind"] = "gbc";
    c.manifest["config"] = {{"in_channels", model.in_channels},
                            {"depth", model.depth},
                            {"channels", model.channels},
                            {"groups", model.groups},
                            {"candidate_bits", model.candidate_bits},
                            {"tau", model.temperature},
                            {"gate_bias", !model.gate_bias.empty()}};
    auto vec = [](const std::vector<float>& v) {
        return Tensor({1, 1, 1, v.size()}, v);
    };
    for (std::size_t k = 0; k < model.depth; ++k) {
        const std::string p = "level" + std::to_string(k) + ".";
        c.tensors.emplace(p + "conv.weight", model.conv_weight[k]);
        c.tensors.emplace(p + "conv.bias", vec(model.conv_bias[k]));
        c.tensors.emplace(p + "norm.scale", vec(model.norm_scale[k]));
        c.tensors.emplace(p + "norm.shift", vec(model.norm_shift[k]));
    }
    c.tensors.emplace("gate.weight", model.gate_weight);
    if (!model.gate_bias.empty()) c.tensors.emplace("gate.bias", vec(model.gate_bias));
    return c;
}

GbcModel gbc_from_container(const Container& c) {
    if (c.manifest.value("kind", "") != "gbc") throw LoadError("container is not a GBC model");
    GbcModel m;
    try {
        const auto& cfg = c.manifest.at("config");
        m.in_channels = cfg.at("in_channels").get<std::size_t>();
        m.depth = cfg.at("depth").get<std::size_t>();
        m.channels = cfg.at("channels").get<std::size_t>();
        m.groups = cfg.at("groups").get<std::size_t>();
        m.candidate_bits = cfg.at("candidate_bits").get<std::vector<BitCode>>();
        m.temperature = cfg.at("tau").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(std::string("GBC manifest config is incomplete (") + e.what() + ")");
    }
    auto vec = [&](const std::string& name, std::size_t n) {
        const Tensor& t = require_tensor(c, name, {1, 1, 1, n});
        return std::vector<float>(t.values().begin(), t.values().end());
    };
    for (std::size_t k = 0; k < m.depth; ++k) {
        const std::string p = "level" + std::to_string(k) + ".";
        const std::size_t cin = k == 0 ? m.in_channels : m.channels;
        m.conv_weight.push_back(require_tensor(c, p + "conv.weight", {m.channels, cin, 3, 3}));
        m.conv_bias.push_back(vec(p + "conv.bias", m.channels));
        m.norm_scale.push_back(vec(p + "norm.scale", m.channels));
        m.norm_shift.push_back(vec(p + "norm.shift", m.channels));
    }
    m.gate_weight = require_tensor(c, "gate.weight", {1, 1, m.statistic_length(), m.candidates()});
    if (c.manifest["config"].value("gate_bias", false)) m.gate_bias = vec("gate.bias", m.candidates());
    try {
        m.validate();
    } catch (const ContractError& e) {
        throw LoadError(std::string("invalid GBC model: ") + e.what());
    }
    return m;
}

void save_gbc(const std::filesystem::path& path, const GbcModel& model) {
    write_container(path, gbc_to_container(model));
}

GbcModel load_gbc(const std::filesystem::path& path) { return gbc_from_container(read_container(path)); }

} // namespace gdq
