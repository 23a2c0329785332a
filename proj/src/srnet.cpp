#include "gdq/srnet.hpp"

#include "gdq/errors.hpp"
#include "gdq/nn.hpp"
#include "gdq/rng.hpp"

#include <algorithm>
#include <cmath>

namespace gdq {

void SrArchitecture::validate() const {
    if (in_channels == 0 || features == 0) throw ContractError("network channels must be > 0");
    if (scale != 2 && scale != 4) throw ContractError("network scale must be 2 or 4");
}

namespace {

std::vector<std::array<std::size_t, 4>> expected_shapes(const SrArchitecture& a) {
    std::vector<std::array<std::size_t, 4>> shapes;
    shapes.push_back({a.features, a.in_channels, 3, 3});
    for (std::size_t b = 0; b < 2 * a.blocks; ++b) shapes.push_back({a.features, a.features, 3, 3});
    shapes.push_back({a.in_channels * a.scale * a.scale, a.features, 3, 3});
    return shapes;
}

std::vector<std::string> layer_names(const SrArchitecture& a) {
    std::vector<std::string> names{"head"};
    for (std::size_t b = 0; b < a.blocks; ++b) {
        names.push_back("body" + std::to_string(b) + ".conv1");
        names.push_back("body" + std::to_string(b) + ".conv2");
    }
    names.push_back("tail");
    return names;
}

nlohmann::ordered_json params_to_json(const QuantParams& qp) {
    return {{"bit", qp.bits}, {"a", qp.clip}, {"signed", qp.is_signed}, {"mode", to_string(qp.mode)}};
}

QuantParams params_from_json(const nlohmann::ordered_json& j) {
    QuantParams qp;
    qp.bits = j.at("bit").get<int>();
    qp.clip = j.at("a").get<double>();
    qp.is_signed = j.at("signed").get<bool>();
    qp.mode = clip_mode_from_string(j.at("mode").get<std::string>());
    return qp;
}

// Input clip for a quantized layer: the calibrated bound, or the input's own
// max when the layer was never calibrated.
QuantParams activation_params(const ConvLayer& layer, const Tensor& input, int bits) {
    QuantParams qp = layer.activation;
    qp.bits = bits;
    if (!qp.calibrated()) qp.clip = clip_statistic(input, qp.is_signed);
    return qp;
}

Tensor run_conv(const ConvLayer& layer, const Tensor& input, int bits, ForwardTrace* trace,
                std::size_t index) {
    if (!layer.quantized || bits == kFullPrecisionBits) {
        return conv2d(input, layer.weight, layer.bias);
    }
    const QuantParams qp = activation_params(layer, input, bits);
    if (trace) trace->entries.push_back({index, bits, layer.weight_params.bits});
    if (!qp.calibrated()) {
        // All-zero input quantizes to itself.
        return conv2d(input, layer.quantized_weight, layer.bias);
    }
    return conv2d(quantize_activation(input, qp), layer.quantized_weight, layer.bias);
}

} // namespace

void QuantModel::prepare() {
    for (auto& layer : layers) {
        if (!layer.quantized) continue;
        auto wq = quantize_weights(layer.weight, weight_bits);
        layer.quantized_weight = std::move(wq.values);
        layer.weight_params = wq.params;
        layer.degenerate_weight = wq.degenerate;
    }
}

void QuantModel::validate() const {
    arch.validate();
    const auto shapes = expected_shapes(arch);
    if (layers.size() != shapes.size()) throw ContractError("network has wrong layer count");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].weight.dims() != shapes[i] || layers[i].bias.size() != shapes[i][0]) {
            throw ContractError("layer '" + layers[i].name + "' has wrong shape");
        }
    }
}

QuantModel make_reference_model(const SrArchitecture& arch, std::uint64_t seed) {
    arch.validate();
    QuantModel m;
    m.arch = arch;
    SplitMix64 rng(seed);
    const auto shapes = expected_shapes(arch);
    const auto names = layer_names(arch);
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        ConvLayer layer;
        layer.name = names[i];
        layer.weight = Tensor(shapes[i][0], shapes[i][1], 3, 3);
        const bool is_body = i > 0 && i + 1 < shapes.size();
        const bool is_tail = i + 1 == shapes.size();
        double bound = std::sqrt(6.0 / static_cast<double>(shapes[i][1] * 9));
        if (is_body) bound *= 0.5;
        if (is_tail) bound *= 0.1;
        for (float& v : layer.weight.values()) v = static_cast<float>(rng.uniform(-bound, bound));
        layer.bias.assign(shapes[i][0], 0.0f);
        for (float& b : layer.bias) b = static_cast<float>(rng.uniform(-0.01, 0.01));
        layer.quantized = is_body;
        // conv1 of a block sees the (signed) residual stream, conv2 the post-ReLU map.
        layer.activation.is_signed = !(is_body && (i % 2 == 0));
        m.layers.push_back(std::move(layer));
    }
    m.prepare();
    return m;
}

bool supported_activation_bits(int bits) noexcept {
    return bits == kFullPrecisionBits || (bits >= kMinBits && bits <= kMaxBits);
}

bool ForwardTrace::layer_invariant() const noexcept {
    return std::all_of(entries.begin(), entries.end(), [&](const Entry& e) {
        return e.activation_bits == entries.front().activation_bits;
    });
}

Tensor forward_quantized(const QuantModel& model, const Tensor& patch, int bits,
                         ForwardTrace* trace) {
    if (!supported_activation_bits(bits)) {
        throw ContractError("unsupported activation bit width " + std::to_string(bits));
    }
    if (patch.batch() != 1 || patch.channels() != model.arch.in_channels) {
        throw ContractError("network expects a (1, " + std::to_string(model.arch.in_channels) +
                            ", H, W) patch");
    }
    Tensor x = run_conv(model.layers.front(), patch, bits, trace, 0);
    for (std::size_t b = 0; b < model.arch.blocks; ++b) {
        const std::size_t i1 = 1 + 2 * b;
        Tensor r = run_conv(model.layers[i1], x, bits, trace, i1);
        relu_inplace(r);
        r = run_conv(model.layers[i1 + 1], r, bits, trace, i1 + 1);
        auto xs = x.values();
        auto rs = r.values();
        for (std::size_t i = 0; i < xs.size(); ++i) xs[i] += rs[i];
    }
    const std::size_t last = model.layers.size() - 1;
    Tensor out = pixel_shuffle(run_conv(model.layers[last], x, bits, trace, last), model.arch.scale);
    const Tensor skip = bicubic_upsample(patch, model.arch.scale);
    auto os = out.values();
    auto ss = skip.values();
    for (std::size_t i = 0; i < os.size(); ++i) os[i] = std::clamp(os[i] + ss[i], 0.0f, 1.0f);
    return out;
}

void calibrate_activations(QuantModel& model, const std::vector<Tensor>& patches, ClipMode mode,
                           double ema_decay) {
    for (auto& layer : model.layers) {
        layer.activation.clip = 0.0;
        layer.activation.mode = mode;
        layer.activation.ema_decay = ema_decay;
    }
    for (const auto& patch : patches) {
        Tensor x = conv2d(patch, model.layers[0].weight, model.layers[0].bias);
        auto observe = [&](ConvLayer& layer, const Tensor& input) {
            layer.activation = calibrate_clip(layer.activation, input).params;
        };
        for (std::size_t b = 0; b < model.arch.blocks; ++b) {
            auto& c1 = model.layers[1 + 2 * b];
            auto& c2 = model.layers[2 + 2 * b];
            observe(c1, x);
            Tensor r = conv2d(x, c1.weight, c1.bias);
            relu_inplace(r);
            observe(c2, r);
            r = conv2d(r, c2.weight, c2.bias);
            for (std::size_t i = 0; i < x.size(); ++i) x.values()[i] += r.values()[i];
        }
    }
}

Container model_to_container(const QuantModel& model) {
    model.validate();
    Container c;
    c.manifest["kind"] = "srnet";
    c.manifest["architecture"] = {{"in_channels", model.arch.in_channels},
                                  {"features", model.arch.features},
                                  {"blocks", model.arch.blocks},
                                  {"scale", model.arch.scale}};
    c.manifest["weight_bits"] = model.weight_bits;
    auto layers = nlohmann::ordered_json::array();
    for (const auto& layer : model.layers) {
        nlohmann::ordered_json entry{{"name", layer.name}, {"quantized", layer.quantized}};
        if (layer.quantized) {
            entry["activation"] = params_to_json(layer.activation);
            entry["weight"] = params_to_json(layer.weight_params);
        }
        layers.push_back(entry);
        c.tensors.emplace(layer.name + ".weight", layer.weight);
        c.tensors.emplace(layer.name + ".bias",
                          Tensor({1, 1, 1, layer.bias.size()}, layer.bias));
    }
    c.manifest["layers"] = layers;
    return c;
}

QuantModel model_from_container(const Container& c) {
    if (c.manifest.value("kind", "") != "srnet") throw LoadError("container is not an SR network");
    QuantModel m;
    try {
        const auto& a = c.manifest.at("architecture");
        m.arch.in_channels = a.at("in_channels").get<std::size_t>();
        m.arch.features = a.at("features").get<std::size_t>();
        m.arch.blocks = a.at("blocks").get<std::size_t>();
        m.arch.scale = a.at("scale").get<std::size_t>();
        m.weight_bits = c.manifest.at("weight_bits").get<int>();
        m.arch.validate();
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(std::string("network manifest is incomplete (") + e.what() + ")");
    } catch (const ContractError& e) {
        throw LoadError(std::string("invalid network architecture: ") + e.what());
    }
    if (m.weight_bits != 8) throw LoadError("network weights must use 8-bit quantization");
    const auto shapes = expected_shapes(m.arch);
    const auto names = layer_names(m.arch);
    const auto& entries = c.manifest.at("layers");
    if (!entries.is_array() || entries.size() != names.size()) {
        throw LoadError("network manifest lists " + std::to_string(entries.size()) +
                        " layers, architecture needs " + std::to_string(names.size()));
    }
    for (std::size_t i = 0; i < names.size(); ++i) {
        ConvLayer layer;
        layer.name = names[i];
        try {
            if (entries[i].at("name").get<std::string>() != names[i]) {
                throw LoadError("layer " + std::to_string(i) + " should be '" + names[i] + "'");
            }
            layer.quantized = entries[i].at("quantized").get<bool>();
            if (layer.quantized) {
                layer.activation = params_from_json(entries[i].at("activation"));
                if (params_from_json(entries[i].at("weight")).bits != 8) {
                    throw LoadError("layer '" + names[i] + "' weight quantizer is not 8-bit");
                }
            }
        } catch (const nlohmann::json::exception& e) {
            throw LoadError("layer '" + names[i] + "' manifest entry is malformed (" + e.what() + ")");
        }
        layer.weight = require_tensor(c, names[i] + ".weight", shapes[i]);
        const Tensor& bias = require_tensor(c, names[i] + ".bias", {1, 1, 1, shapes[i][0]});
        layer.bias.assign(bias.values().begin(), bias.values().end());
        m.layers.push_back(std::move(layer));
    }
    m.prepare();
    return m;
}

void save_model(const std::filesystem::path& path, const QuantModel& model) {
    write_container(path, model_to_container(model));
}

QuantModel load_model(const std::filesystem::path& path) {
    return model_from_container(read_container(path));
}

} // namespace gdq
