#include "cli.hpp"
#include "gdq/e2b.hpp"
#include "gdq/entropy.hpp"
#include "gdq/errors.hpp"
#include "gdq/gbc.hpp"
#include "gdq/metrics.hpp"
#include "gdq/nn.hpp"
#include "gdq/pipeline.hpp"
#include "gdq/quantizer.hpp"
#include "gdq/rng.hpp"
#include "gdq/srnet.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace gdq;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

// Arrays of rank 1..4 map onto (N, C, H, W) by left-padding with ones.
Tensor to_tensor(const FloatArray& a) {
    if (a.ndim() < 1 || a.ndim() > 4) throw ContractError("expected an array of rank 1 to 4");
    std::array<std::size_t, 4> dims{1, 1, 1, 1};
    const auto off = 4 - static_cast<std::size_t>(a.ndim());
    for (py::ssize_t i = 0; i < a.ndim(); ++i) dims[off + static_cast<std::size_t>(i)] = static_cast<std::size_t>(a.shape(i));
    return Tensor(dims, std::vector<float>(a.data(), a.data() + a.size()));
}

py::array_t<float> to_array(const Tensor& t, py::ssize_t rank = 4) {
    std::vector<py::ssize_t> shape;
    for (std::size_t i = static_cast<std::size_t>(4 - rank); i < 4; ++i) shape.push_back(static_cast<py::ssize_t>(t.dims()[i]));
    py::array_t<float> out(shape);
    std::copy(t.values().begin(), t.values().end(), out.mutable_data());
    return out;
}

EntropyConfig entropy_config(std::size_t bins, std::optional<double> sigma, const std::string& mode) {
    EntropyConfig cfg;
    cfg.bins = bins;
    cfg.sigma = sigma;
    cfg.mode = entropy_mode_from_string(mode);
    cfg.validate();
    return cfg;
}

py::dict plan_dict(const PatchPlan& p) {
    py::dict d;
    d["id"] = p.id;
    d["origin"] = py::make_tuple(p.origin.row, p.origin.col);
    d["entropy"] = p.entropy;
    d["gbc_bit"] = p.gbc_bit;
    d["final_bit"] = p.final_bit;
    d["p"] = p.gate_score;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Patch-wise layer-invariant dynamic quantization for super-resolution";

    py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
    py::register_exception<LoadError>(m, "LoadError", PyExc_RuntimeError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    m.def(
        "quantize",
        [](const FloatArray& x, int bits, double clip, bool is_signed) {
            QuantParams qp;
            qp.bits = bits;
            qp.clip = clip;
            qp.is_signed = is_signed;
            std::vector<double> in(x.data(), x.data() + x.size()), out(in.size());
            quantize_span<double>(in, out, qp);
            py::array_t<double> result(std::vector<py::ssize_t>(x.shape(), x.shape() + x.ndim()));
            std::copy(out.begin(), out.end(), result.mutable_data());
            return result;
        },
        py::arg("x"), py::arg("bits"), py::arg("clip"), py::arg("signed") = true,
        "Fake-quantize values in double precision.");
    m.def(
        "quantize_weights",
        [](const FloatArray& w, int bits) {
            const auto wq = quantize_weights(to_tensor(w), bits);
            py::array_t<float> out(std::vector<py::ssize_t>(w.shape(), w.shape() + w.ndim()));
            std::copy(wq.values.values().begin(), wq.values.values().end(), out.mutable_data());
            return py::make_tuple(out, wq.params.clip, wq.degenerate);
        },
        py::arg("w"), py::arg("bits") = 8, "Per-tensor max-abs weight quantization: (values, clip, degenerate).");

    m.def(
        "patch_entropy",
        [](const FloatArray& patch, std::size_t bins, std::optional<double> sigma, const std::string& mode) {
            return patch_entropy(to_tensor(patch), entropy_config(bins, sigma, mode));
        },
        py::arg("patch"), py::arg("bins") = 256, py::arg("sigma") = std::nullopt, py::arg("mode") = "bin",
        "Kernel-density entropy in nats; (C, H, W) RGB input is reduced to luma.");
    m.def(
        "quantile_index",
        [](std::vector<double> entropies, double t) {
            const auto q = quantile_index(make_entropy_stats(std::move(entropies), {}), t);
            return py::make_tuple(q.index, q.threshold);
        },
        py::arg("entropies"), py::arg("t"));
    m.def(
        "assign_bit",
        [](double e, std::vector<double> cutoffs, std::vector<int> codes) {
            CalibratedThresholds thr;
            thr.cutoffs = std::move(cutoffs);
            thr.bit_codes = std::move(codes);
            if (thr.bit_codes.size() != thr.cutoffs.size() + 1) throw ContractError("need one more code than cutoffs");
            return assign_bit(e, thr);
        },
        py::arg("entropy"), py::arg("cutoffs"), py::arg("bit_codes") = std::vector<int>{4, 5, 8});
    m.def(
        "atc_update",
        [](double t, std::vector<double> batch, double e, double gamma) { return atc_update(t, batch, e, gamma); },
        py::arg("t"), py::arg("batch"), py::arg("entropy"), py::arg("gamma") = 0.9997);
    m.def(
        "calibrate_thresholds",
        [](std::vector<double> entropies, std::vector<double> thresholds, std::vector<int> bits, double gamma,
           std::size_t batch, const std::string& select) {
            E2BConfig cfg;
            cfg.thresholds = std::move(thresholds);
            cfg.bit_codes = std::move(bits);
            cfg.gamma = gamma;
            const auto r = calibrate_thresholds(make_entropy_stats(std::move(entropies), {}), cfg,
                                                {batch, atc_select_from_string(select), true});
            py::dict d;
            d["fractions"] = r.thresholds.fractions;
            d["cutoffs"] = r.thresholds.cutoffs;
            d["bit_codes"] = r.thresholds.bit_codes;
            d["iterations"] = r.thresholds.iterations;
            d["trajectory"] = r.trajectory;
            return d;
        },
        py::arg("entropies"), py::arg("thresholds") = std::vector<double>{0.5, 0.9},
        py::arg("bit_codes") = std::vector<int>{4, 5, 8}, py::arg("gamma") = 0.9997, py::arg("batch_size") = 16,
        py::arg("select") = "per-patch-sequential");

    m.def(
        "sample_gate",
        [](std::vector<double> logits, std::uint64_t seed, bool deterministic, double tau, std::vector<int> bits) {
            GbcModel model;
            model.temperature = tau;
            model.candidate_bits = std::move(bits);
            if (logits.size() != model.candidate_bits.size()) throw ContractError("one logit per candidate bit");
            const auto d = sample_gate(logits, model, seed, deterministic);
            py::dict out;
            out["index"] = d.index;
            out["bit"] = d.bit;
            out["score"] = d.score;
            out["noise"] = d.noise;
            return out;
        },
        py::arg("logits"), py::arg("seed") = 0, py::arg("deterministic") = true, py::arg("tau") = 1.0,
        py::arg("bit_codes") = std::vector<int>{4, 6, 8});
    m.def("derive_stream", &derive_stream, py::arg("seed"), py::arg("index"));

    m.def(
        "conv2d",
        [](const FloatArray& x, const FloatArray& w, std::vector<float> bias, std::size_t stride, std::size_t pad,
           bool reflect) {
            return to_array(conv2d(to_tensor(x), to_tensor(w), bias, {stride, pad, reflect ? PadMode::reflect : PadMode::zeros}));
        },
        py::arg("x"), py::arg("w"), py::arg("bias") = std::vector<float>{}, py::arg("stride") = 1, py::arg("pad") = 1,
        py::arg("reflect") = true, "2-D convolution of (N, C, H, W) input with (Cout, Cin, k, k) weights.");

    m.def(
        "psnr",
        [](const FloatArray& a, const FloatArray& b, double peak) {
            const auto r = psnr(to_tensor(a), to_tensor(b), peak);
            return r.infinite ? std::numeric_limits<double>::infinity() : r.db;
        },
        py::arg("a"), py::arg("b"), py::arg("peak") = 1.0);
    m.def("ssim", [](const FloatArray& a, const FloatArray& b) { return ssim(to_tensor(a), to_tensor(b)); });
    m.def("l1_loss", [](const FloatArray& a, const FloatArray& b) { return l1_loss(to_tensor(a), to_tensor(b)); });

    py::class_<QuantModel>(m, "Model")
        .def_static(
            "reference",
            [](std::size_t scale, std::size_t features, std::size_t blocks, std::uint64_t seed) {
                SrArchitecture arch;
                arch.scale = scale;
                arch.features = features;
                arch.blocks = blocks;
                return make_reference_model(arch, seed);
            },
            py::arg("scale") = 2, py::arg("features") = 16, py::arg("blocks") = 4, py::arg("seed") = 0)
        .def_static("load", &load_model, py::arg("path"))
        .def("save", [](const QuantModel& self, const std::filesystem::path& p) { save_model(p, self); })
        .def_property_readonly("scale", [](const QuantModel& self) { return self.arch.scale; })
        .def(
            "forward",
            [](const QuantModel& self, const FloatArray& patch, int bits) {
                const Tensor t = to_tensor(patch);
                return to_array(forward_quantized(self, t, bits), patch.ndim() == 3 ? 3 : 4);
            },
            py::arg("patch"), py::arg("bits") = 8, "Forward one (C, H, W) or (1, C, H, W) patch at a bit width (32 = float).")
        .def(
            "trace",
            [](const QuantModel& self, const FloatArray& patch, int bits) {
                ForwardTrace tr;
                forward_quantized(self, to_tensor(patch), bits, &tr);
                std::vector<py::tuple> out;
                for (const auto& e : tr.entries) out.push_back(py::make_tuple(e.layer, e.activation_bits, e.weight_bits));
                return out;
            },
            py::arg("patch"), py::arg("bits"));

    py::class_<GbcModel>(m, "Controller")
        .def_static(
            "random",
            [](std::vector<int> bits, std::uint64_t seed) {
                GbcShape s;
                s.candidate_bits = std::move(bits);
                return make_random_gbc(s, seed);
            },
            py::arg("bit_codes") = std::vector<int>{4, 6, 8}, py::arg("seed") = 0)
        .def_static("load", &load_gbc, py::arg("path"))
        .def("save", [](const GbcModel& self, const std::filesystem::path& p) { save_gbc(p, self); })
        .def_property_readonly("candidate_bits", [](const GbcModel& self) { return self.candidate_bits; })
        .def(
            "allocate",
            [](const GbcModel& self, const std::vector<FloatArray>& patches, bool deterministic, std::uint64_t seed) {
                std::vector<Tensor> ts;
                for (const auto& p : patches) ts.push_back(to_tensor(p));
                std::vector<py::dict> out;
                for (const auto& p : allocate_bits(ts, self, deterministic, seed)) out.push_back(plan_dict(p));
                return out;
            },
            py::arg("patches"), py::arg("deterministic") = true, py::arg("seed") = 0);

    m.def(
        "run_pipeline",
        [](const QuantModel& model, const GbcModel& gbc, const FloatArray& image, std::optional<std::vector<double>> cutoffs,
           std::vector<int> bit_codes, std::optional<int> force_bit, std::size_t patch_size, bool deterministic,
           std::uint64_t seed) {
            PipelineOptions opts;
            opts.patch_size = patch_size;
            opts.force_bit = force_bit;
            opts.deterministic = deterministic;
            opts.seed = seed;
            opts.refine = cutoffs.has_value();
            CalibratedThresholds thr;
            if (cutoffs) {
                thr.cutoffs = *cutoffs;
                thr.bit_codes = std::move(bit_codes);
            }
            PipelineResult r;
            {
                py::gil_scoped_release release;
                r = run_pipeline(model, gbc, cutoffs ? &thr : nullptr, to_tensor(image), opts);
            }
            py::dict d;
            d["sr"] = to_array(r.sr, image.ndim() == 3 ? 3 : 4);
            std::vector<py::dict> plans;
            for (const auto& p : r.plans) plans.push_back(plan_dict(p));
            d["plans"] = plans;
            d["fab"] = r.fab;
            d["bitops"] = r.bitops.per_patch_mean;
            d["bitops_ratio"] = r.bitops.ratio;
            d["params_ratio"] = r.params.ratio;
            d["layer_invariance_violations"] = r.layer_invariance_violations;
            return d;
        },
        py::arg("model"), py::arg("controller"), py::arg("image"), py::arg("cutoffs") = std::nullopt,
        py::arg("bit_codes") = std::vector<int>{4, 5, 8}, py::arg("force_bit") = std::nullopt,
        py::arg("patch_size") = 96, py::arg("deterministic") = true, py::arg("seed") = 0,
        "Patch split, bit allocation, optional entropy refinement, quantized forward and stitching.");

    m.def(
        "cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = cli::run(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Run one gdq command in-process: (exit_code, stdout, stderr).");
}
