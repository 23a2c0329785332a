#include "cli.hpp"

#include "gdq/e2b.hpp"
#include "gdq/entropy.hpp"
#include "gdq/errors.hpp"
#include "gdq/gbc.hpp"
#include "gdq/image_io.hpp"
#include "gdq/metrics.hpp"
#include "gdq/parallel.hpp"
#include "gdq/patch.hpp"
#include "gdq/pipeline.hpp"
#include "gdq/records.hpp"
#include "gdq/srnet.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

namespace fs = std::filesystem;

namespace gdq::cli {
namespace {

/// Artifact that a command needs but cannot find or parse.
struct MissingArtifact : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EntropyOptions {
    std::size_t bins = 256;
    double sigma = 0.0; // 0 = one bin width
    double epsilon = 1e-12;
    std::string mode = "bin";

    EntropyConfig config() const {
        EntropyConfig cfg;
        cfg.bins = bins;
        if (sigma > 0.0) cfg.sigma = sigma;
        cfg.epsilon = epsilon;
        cfg.mode = entropy_mode_from_string(mode);
        cfg.validate();
        return cfg;
    }
};

void add_entropy_options(CLI::App* app, EntropyOptions& o) {
    app->add_option("--bins", o.bins, "Kernel bins B")->capture_default_str();
    app->add_option("--sigma", o.sigma, "Kernel bandwidth (default: one bin width)");
    app->add_option("--epsilon", o.epsilon, "Normaliser epsilon")->capture_default_str();
    app->add_option("--entropy-mode", o.mode, "bin | pixel")
        ->check(CLI::IsMember({"bin", "pixel"}))
        ->capture_default_str();
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
    std::vector<T> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::istringstream is(item);
        T v{};
        if (!(is >> v) || !is.eof()) {
            throw ContractError(std::string("cannot parse ") + what + " entry '" + item + "'");
        }
        out.push_back(v);
    }
    if (out.empty()) throw ContractError(std::string("empty ") + what + " list");
    return out;
}

template <typename T>
std::string join(const std::vector<T>& v, const char* sep = ",") {
    std::ostringstream os;
    os << std::setprecision(17);
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? sep : "") << v[i];
    return os.str();
}

Tensor load_artifact_image(const fs::path& p) {
    try {
        return load_image(p);
    } catch (const IoError& e) {
        throw MissingArtifact(e.what());
    }
}

template <typename Fn>
auto load_artifact(const fs::path& p, Fn&& fn) {
    if (!fs::exists(p)) throw MissingArtifact("missing artifact: " + p.string());
    try {
        return fn(p);
    } catch (const IoError& e) {
        throw MissingArtifact(e.what());
    } catch (const LoadError& e) {
        throw MissingArtifact(e.what());
    } catch (const ContractError& e) {
        throw MissingArtifact(p.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------- stats

struct StatsArgs {
    fs::path corpus;
    fs::path out;
    fs::path hist;
    std::size_t patch_size = 96;
    std::size_t hist_bins = 64;
    EntropyOptions entropy;
};

int cmd_stats(const StatsArgs& a, std::ostream& out) {
    const auto images = list_images(a.corpus);
    if (images.empty()) throw ContractError("no images found in " + a.corpus.string());
    const EntropyConfig cfg = a.entropy.config();

    std::vector<std::vector<double>> per_image(images.size());
    parallel_for(images.size(), [&](std::size_t i) {
        const auto set = extract_patches(load_image(images[i]), a.patch_size);
        for (const auto& p : set.patches) per_image[i].push_back(patch_entropy(p, cfg));
    });
    std::vector<double> entropies;
    for (const auto& v : per_image) entropies.insert(entropies.end(), v.begin(), v.end());
    const EntropyStats stats = make_entropy_stats(std::move(entropies), cfg);

    Json j = stats_to_json(stats);
    j["patch_size"] = a.patch_size;
    Json sources = Json::array();
    for (std::size_t i = 0; i < images.size(); ++i) {
        sources.push_back({{"image", images[i].filename().string()}, {"patches", per_image[i].size()}});
    }
    j["sources"] = sources;
    write_json(a.out, j);
    stats_from_json(read_json(a.out));

    const fs::path hist_path = a.hist.empty() ? fs::path(a.out.string() + ".hist.csv") : a.hist;
    const auto hist = entropy_histogram(stats, a.hist_bins);
    std::ofstream csv(hist_path, std::ios::trunc);
    if (!csv) throw IoError("cannot create " + hist_path.string());
    csv << "bin,lower,upper,count\n" << std::setprecision(10);
    const double width = (hist.upper - hist.lower) / static_cast<double>(a.hist_bins);
    for (std::size_t b = 0; b < hist.counts.size(); ++b) {
        csv << b << ',' << hist.lower + width * static_cast<double>(b) << ','
            << hist.lower + width * static_cast<double>(b + 1) << ',' << hist.counts[b] << '\n';
    }
    if (!csv) throw IoError("write failed for " + hist_path.string());

    out << "patches M=" << stats.count() << " from " << images.size() << " images; H in ["
        << stats.min() << ", " << stats.max() << "] nats\n";
    return kExitOk;
}

// ------------------------------------------------------------ calibrate

struct CalibrateArgs {
    fs::path stats;
    fs::path out;
    std::string t = "0.5,0.9";
    std::string bits = "4,5,8";
    double gamma = 0.9997;
    std::size_t batch = 16;
    std::string select = "per-patch-sequential";
    fs::path trace;
};

ThresholdsRecord calibrate_record(const EntropyStats& stats, const E2BConfig& e2b,
                                  std::size_t batch, AtcSelect select,
                                  std::vector<std::vector<double>>* trajectory) {
    AtcOptions opts{batch, select, trajectory != nullptr};
    auto res = calibrate_thresholds(stats, e2b, opts);
    if (trajectory) *trajectory = std::move(res.trajectory);
    ThresholdsRecord rec;
    rec.thresholds = std::move(res.thresholds);
    rec.initial_fractions = e2b.thresholds;
    rec.gamma = e2b.gamma;
    rec.batch_size = batch;
    rec.select = select;
    rec.stats_digest = stats_digest(stats);
    rec.entropy = stats.config;
    return rec;
}

void require_supported_bits(const std::vector<BitCode>& bits) {
    for (BitCode b : bits) {
        if (!supported_activation_bits(b)) {
            throw ContractError("unsupported bit code " + std::to_string(b) +
                                " (expected 2..8 or 32)");
        }
    }
}

int cmd_calibrate(const CalibrateArgs& a, std::ostream& out) {
    const EntropyStats stats =
        load_artifact(a.stats, [](const fs::path& p) { return stats_from_json(read_json(p)); });
    E2BConfig e2b;
    e2b.thresholds = parse_list<double>(a.t, "threshold");
    e2b.bit_codes = parse_list<int>(a.bits, "bit");
    e2b.gamma = a.gamma;
    e2b.validate();
    require_supported_bits(e2b.bit_codes);

    std::vector<std::vector<double>> trajectory;
    const auto rec = calibrate_record(stats, e2b, a.batch, atc_select_from_string(a.select),
                                      a.trace.empty() ? nullptr : &trajectory);
    write_json(a.out, thresholds_to_json(rec));
    thresholds_from_json(read_json(a.out));
    if (!a.trace.empty()) {
        std::ofstream csv(a.trace, std::ios::trunc);
        if (!csv) throw IoError("cannot create " + a.trace.string());
        csv << "iteration";
        for (std::size_t k = 0; k < e2b.thresholds.size(); ++k) csv << ",t" << k + 1;
        csv << '\n' << std::setprecision(17);
        for (std::size_t j = 0; j < trajectory.size(); ++j) {
            csv << j + 1;
            for (double t : trajectory[j]) csv << ',' << t;
            csv << '\n';
        }
    }
    out << "calibrated " << rec.thresholds.iterations << " iterations: fractions ["
        << join(rec.thresholds.fractions) << "] -> cutoffs [" << join(rec.thresholds.cutoffs)
        << "] nats\n";
    return kExitOk;
}

// ---------------------------------------------------------------- infer

struct InferArgs {
    fs::path model;
    fs::path gbc;
    fs::path thresholds;
    fs::path input;
    fs::path output;
    fs::path report;
    fs::path hr;
    std::optional<int> force_bit;
    bool deterministic = false;
    bool stochastic = false;
    bool no_refine = false;
    bool timing = false;
    std::uint64_t seed = 0;
    std::size_t patch_size = 96;
};

Json run_config_json(const InferArgs& a, const ThresholdsRecord* thr, const GbcModel& gbc,
                     const PipelineOptions& opts) {
    Json cfg{{"command", "infer"},
             {"model", a.model.string()},
             {"gbc", a.gbc.string()},
             {"thresholds", a.thresholds.string()},
             {"input", a.input.string()},
             {"output", a.output.string()},
             {"reference", a.hr.empty() ? Json(nullptr) : Json(a.hr.string())},
             {"patch_size", opts.patch_size},
             {"overlap", opts.overlap},
             {"seed", opts.seed},
             {"deterministic", opts.deterministic},
             {"force_bit", opts.force_bit ? Json(*opts.force_bit) : Json(nullptr)},
             {"refine", opts.refine},
             {"gbc_candidate_bits", gbc.candidate_bits},
             {"gbc_tau", gbc.temperature},
             {"entropy", entropy_config_to_json(opts.entropy)}};
    if (thr) {
        cfg["e2b"] = {{"fractions", thr->thresholds.fractions},
                      {"cutoffs", thr->thresholds.cutoffs},
                      {"bit_codes", thr->thresholds.bit_codes},
                      {"gamma", thr->gamma},
                      {"stats_digest", thr->stats_digest}};
    }
    return cfg;
}

Json report_json(const PipelineResult& r, const QualityMetrics& q, const std::string& reference,
                 Json config, bool timing) {
    Json j;
    j["psnr_db"] = q.psnr.infinite ? Json(nullptr) : Json(q.psnr.db);
    j["psnr_infinite"] = q.psnr.infinite;
    j["ssim"] = q.ssim;
    j["l1"] = q.l1;
    j["fab"] = r.fab;
    j["bitops"] = r.bitops.per_patch_mean;
    j["bitops_full_precision"] = r.bitops.full_precision;
    j["bitops_ratio"] = r.bitops.ratio;
    j["params"] = r.params.effective;
    j["params_full_precision"] = r.params.full;
    j["params_ratio"] = r.params.ratio;
    j["metric_reference"] = reference;
    j["patches"] = r.plans.size();
    j["layer_invariance_violations"] = r.layer_invariance_violations;
    if (timing) j["runtime_seconds"] = r.runtime_seconds;
    Json per_patch = Json::array();
    for (const auto& p : r.plans) per_patch.push_back(plan_to_json(p));
    j["per_patch"] = per_patch;
    j["config"] = std::move(config);
    return j;
}

int cmd_infer(const InferArgs& a, std::ostream& out) {
    const QuantModel model = load_artifact(a.model, [](const fs::path& p) { return load_model(p); });
    const GbcModel gbc = load_artifact(a.gbc, [](const fs::path& p) { return load_gbc(p); });
    std::optional<ThresholdsRecord> thr;
    const bool refine = !a.no_refine && !a.force_bit;
    if (refine || !a.thresholds.empty()) {
        if (a.thresholds.empty()) throw MissingArtifact("--thresholds is required for refinement");
        thr = load_artifact(a.thresholds,
                            [](const fs::path& p) { return thresholds_from_json(read_json(p)); });
    }
    if (!fs::exists(a.input)) throw MissingArtifact("missing artifact: " + a.input.string());
    const Tensor lr = load_artifact_image(a.input);
    std::optional<Tensor> hr;
    if (!a.hr.empty()) hr = load_artifact_image(a.hr);

    PipelineOptions opts;
    opts.patch_size = a.patch_size;
    opts.force_bit = a.force_bit;
    opts.deterministic = !a.stochastic;
    opts.seed = a.seed;
    opts.refine = refine;
    if (thr) opts.entropy = thr->entropy;

    PipelineResult result;
    QualityMetrics quality;
    try {
        result = run_pipeline(model, gbc, thr ? &thr->thresholds : nullptr, lr, opts);
        const Tensor reference = hr ? *hr : run_full_precision(model, lr, opts.patch_size);
        quality = measure_quality(result.sr, reference);
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("inference failed: ") + e.what());
    }

    save_image(a.output, result.sr);
    const Json report = report_json(result, quality, hr ? "hr" : "full_precision",
                                    run_config_json(a, thr ? &*thr : nullptr, gbc, opts), a.timing);
    if (!a.report.empty()) {
        write_json(a.report, report);
        read_json(a.report);
    }
    const Tensor check = load_image(a.output);
    if (check.height() != result.sr.height() || check.width() != result.sr.width()) {
        throw IoError("output image did not read back with the expected geometry");
    }
    out << std::fixed << std::setprecision(2) << "patches " << result.plans.size() << ", FAB "
        << result.fab << ", BitOPs " << format_with_reduction(result.bitops.per_patch_mean,
                                                              result.bitops.full_precision)
        << ", PSNR ";
    if (quality.psnr.infinite) {
        out << "inf";
    } else {
        out << quality.psnr.db;
    }
    out << " dB, SSIM " << std::setprecision(4) << quality.ssim << '\n';
    if (a.timing) out << "runtime " << result.runtime_seconds << " s\n";
    return kExitOk;
}

// ---------------------------------------------------------------- sweep

struct SweepArgs {
    fs::path model;
    fs::path gbc;
    fs::path stats;
    fs::path corpus;
    fs::path hr_dir;
    fs::path out;
    std::string grid = "4,5,8@0.5,0.9;4,6,8@0.5,0.9";
    double gamma = 0.9997;
    std::size_t batch = 16;
    std::string select = "per-patch-sequential";
    std::uint64_t seed = 0;
    std::size_t patch_size = 96;
};

struct GridPoint {
    std::string label;
    std::optional<int> uniform_bit;
    E2BConfig e2b;
};

std::vector<GridPoint> parse_grid(const std::string& text, double gamma) {
    std::vector<GridPoint> grid;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ';')) {
        if (item.empty()) continue;
        GridPoint g;
        g.label = item;
        if (item.rfind("uniform:", 0) == 0) {
            g.uniform_bit = parse_list<int>(item.substr(8), "bit").front();
        } else {
            const auto at = item.find('@');
            if (at == std::string::npos) {
                throw ContractError("grid entry '" + item + "' must look like 4,5,8@0.5,0.9");
            }
            g.e2b.bit_codes = parse_list<int>(item.substr(0, at), "bit");
            g.e2b.thresholds = parse_list<double>(item.substr(at + 1), "threshold");
            g.e2b.gamma = gamma;
        }
        grid.push_back(std::move(g));
    }
    if (grid.empty()) throw ContractError("sweep grid is empty");
    return grid;
}

int cmd_sweep(const SweepArgs& a, std::ostream& out) {
    const QuantModel model = load_artifact(a.model, [](const fs::path& p) { return load_model(p); });
    const GbcModel gbc = load_artifact(a.gbc, [](const fs::path& p) { return load_gbc(p); });
    const EntropyStats stats =
        load_artifact(a.stats, [](const fs::path& p) { return stats_from_json(read_json(p)); });
    const auto images = list_images(a.corpus);
    if (images.empty()) throw ContractError("no images found in " + a.corpus.string());
    const auto grid = parse_grid(a.grid, a.gamma);

    std::vector<Tensor> inputs;
    std::vector<Tensor> references;
    for (const auto& img : images) {
        inputs.push_back(load_image(img));
        if (!a.hr_dir.empty()) {
            references.push_back(load_image(a.hr_dir / img.filename()));
        } else {
            references.push_back(run_full_precision(model, inputs.back(), a.patch_size));
        }
    }

    std::ofstream csv(a.out, std::ios::trunc);
    if (!csv) throw IoError("cannot create " + a.out.string());
    csv << "config,fab,psnr_db,ssim,bitops_ratio,status\n";
    std::size_t failed = 0;
    for (const auto& g : grid) {
        try {
            std::optional<ThresholdsRecord> thr;
            if (!g.uniform_bit) {
                g.e2b.validate();
                require_supported_bits(g.e2b.bit_codes);
                thr = calibrate_record(stats, g.e2b, a.batch, atc_select_from_string(a.select),
                                       nullptr);
            }
            PipelineOptions opts;
            opts.patch_size = a.patch_size;
            opts.force_bit = g.uniform_bit;
            opts.seed = a.seed;
            opts.entropy = stats.config;
            double fab_sum = 0.0, psnr_sum = 0.0, ssim_sum = 0.0, ratio_sum = 0.0;
            std::size_t patches = 0;
            std::size_t infinite = 0;
            for (std::size_t i = 0; i < inputs.size(); ++i) {
                const auto r = run_pipeline(model, gbc, thr ? &thr->thresholds : nullptr,
                                            inputs[i], opts);
                const auto q = measure_quality(r.sr, references[i]);
                fab_sum += r.fab * static_cast<double>(r.plans.size());
                patches += r.plans.size();
                if (q.psnr.infinite) {
                    ++infinite;
                } else {
                    psnr_sum += q.psnr.db;
                }
                ssim_sum += q.ssim;
                ratio_sum += r.bitops.ratio;
            }
            const double n = static_cast<double>(inputs.size());
            csv << '"' << g.label << '"' << std::fixed << std::setprecision(4) << ','
                << fab_sum / static_cast<double>(patches) << ',';
            if (infinite == inputs.size()) {
                csv << "inf";
            } else {
                csv << psnr_sum / static_cast<double>(inputs.size() - infinite);
            }
            csv << ',' << ssim_sum / n << ',' << std::setprecision(6) << ratio_sum / n << ",ok\n";
        } catch (const std::exception& e) {
            ++failed;
            std::string msg = e.what();
            std::replace(msg.begin(), msg.end(), '"', '\'');
            csv << '"' << g.label << "\",,,,,\"failed: " << msg << "\"\n";
        }
        csv.unsetf(std::ios::floatfield);
    }
    if (!csv) throw IoError("write failed for " + a.out.string());
    out << "wrote " << grid.size() << " rows (" << failed << " failed) to " << a.out.string() << '\n';
    return kExitOk;
}

// --------------------------------------------------------------- report

// Pads by code points so the UTF-8 arrow does not skew columns.
std::string cell(const std::string& text, std::size_t width) {
    std::size_t glyphs = 0;
    for (unsigned char ch : text) glyphs += (ch & 0xC0) != 0x80;
    return text + std::string(glyphs < width ? width - glyphs : 1, ' ');
}

int cmd_report(const std::vector<fs::path>& reports, std::ostream& out) {
    std::vector<Json> loaded;
    for (const auto& p : reports) {
        loaded.push_back(load_artifact(p, [](const fs::path& f) { return read_json(f); }));
    }
    out << cell("Report", 28) << cell("FAB", 8) << cell("Params", 20) << cell("BitOPs", 20)
        << "PSNR/SSIM\n";
    const Json& base = loaded.front();
    const double full_params = base.at("params_full_precision").get<double>();
    const double full_bitops = base.at("bitops_full_precision").get<double>();
    out << cell("full precision", 28) << cell("32.00", 8)
        << cell(format_with_reduction(full_params, full_params), 20)
        << cell(format_with_reduction(full_bitops, full_bitops), 20) << "-\n";
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        const Json& r = loaded[i];
        std::ostringstream fab;
        fab << std::fixed << std::setprecision(2) << r.at("fab").get<double>();
        std::ostringstream quality;
        quality << std::fixed << std::setprecision(2);
        if (r.at("psnr_infinite").get<bool>()) {
            quality << "inf";
        } else {
            quality << r.at("psnr_db").get<double>();
        }
        quality << '/' << std::setprecision(4) << r.at("ssim").get<double>();
        out << cell(reports[i].filename().string(), 28) << cell(fab.str(), 8)
            << cell(format_with_reduction(r.at("params").get<double>(),
                                          r.at("params_full_precision").get<double>()),
                    20)
            << cell(format_with_reduction(r.at("bitops").get<double>(),
                                          r.at("bitops_full_precision").get<double>()),
                    20)
            << quality.str() << '\n';
    }
    return kExitOk;
}

// ---------------------------------------------------------- model setup

struct InitModelArgs {
    fs::path out;
    std::size_t scale = 2;
    std::size_t features = 16;
    std::size_t blocks = 4;
    std::uint64_t seed = 0;
    fs::path calib_dir;
    std::size_t calib_patch = 48;
    std::string calib_mode = "static_max";
};

int cmd_init_model(const InitModelArgs& a, std::ostream& out) {
    SrArchitecture arch;
    arch.scale = a.scale;
    arch.features = a.features;
    arch.blocks = a.blocks;
    QuantModel model = make_reference_model(arch, a.seed);
    if (!a.calib_dir.empty()) {
        std::vector<Tensor> patches;
        for (const auto& img : list_images(a.calib_dir)) {
            auto set = extract_patches(load_image(img), a.calib_patch);
            for (auto& p : set.patches) patches.push_back(std::move(p));
        }
        if (patches.empty()) throw ContractError("no calibration images in " + a.calib_dir.string());
        calibrate_activations(model, patches, clip_mode_from_string(a.calib_mode));
    }
    save_model(a.out, model);
    load_model(a.out);
    out << "wrote x" << arch.scale << " network (" << arch.blocks << " blocks, " << arch.features
        << " features) to " << a.out.string() << '\n';
    return kExitOk;
}

struct InitGbcArgs {
    fs::path out;
    std::uint64_t seed = 0;
    std::size_t depth = 4;
    std::size_t channels = 16;
    std::size_t groups = 4;
    std::string bits = "4,6,8";
    double tau = 1.0;
    fs::path calib_dir;
    std::size_t calib_patch = 96;
};

int cmd_init_gbc(const InitGbcArgs& a, std::ostream& out) {
    GbcShape shape;
    shape.depth = a.depth;
    shape.channels = a.channels;
    shape.groups = a.groups;
    shape.candidate_bits = parse_list<int>(a.bits, "bit");
    shape.temperature = a.tau;
    GbcModel gbc = make_random_gbc(shape, a.seed);
    if (!a.calib_dir.empty()) {
        std::vector<Tensor> patches;
        for (const auto& img : list_images(a.calib_dir)) {
            auto set = extract_patches(load_image(img), a.calib_patch);
            for (auto& p : set.patches) patches.push_back(std::move(p));
        }
        if (patches.empty()) throw ContractError("no calibration images in " + a.calib_dir.string());
        standardize_gate(gbc, patches);
    }
    save_gbc(a.out, gbc);
    load_gbc(a.out);
    out << "wrote controller (D=" << gbc.depth << ", C=" << gbc.channels << ", bits "
        << join(gbc.candidate_bits, "/") << ") to " << a.out.string() << '\n';
    return kExitOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Patch-wise layer-invariant dynamic quantization for super-resolution"};
    app.require_subcommand(1);

    StatsArgs stats;
    auto* s = app.add_subcommand("stats", "Entropy statistics over a corpus of LR images");
    s->add_option("--corpus", stats.corpus, "Directory of images")->required();
    s->add_option("--out", stats.out, "Statistics JSON")->required();
    s->add_option("--hist", stats.hist, "Histogram CSV (default: <out>.hist.csv)");
    s->add_option("--hist-bins", stats.hist_bins, "Histogram bins")->capture_default_str();
    s->add_option("--patch-size", stats.patch_size, "LR patch side")->capture_default_str();
    add_entropy_options(s, stats.entropy);

    CalibrateArgs cal;
    auto* c = app.add_subcommand("calibrate", "Resolve and calibrate E2B thresholds");
    c->add_option("--stats", cal.stats, "Statistics JSON")->required();
    c->add_option("--out", cal.out, "Thresholds JSON")->required();
    c->add_option("--t", cal.t, "Initial threshold fractions")->capture_default_str();
    c->add_option("--bits", cal.bits, "Bit codes, one more than thresholds")->capture_default_str();
    c->add_option("--gamma", cal.gamma, "EMA decay")->capture_default_str();
    c->add_option("--batch", cal.batch, "Mini-batch size")->capture_default_str();
    c->add_option("--atc-select", cal.select, "per-patch-sequential | batch-mean")
        ->check(CLI::IsMember({"per-patch-sequential", "batch-mean"}))
        ->capture_default_str();
    c->add_option("--trace", cal.trace, "Write the per-iteration fraction trajectory (CSV)");

    InferArgs inf;
    auto* i = app.add_subcommand("infer", "Super-resolve one image with dynamic quantization");
    i->add_option("--model", inf.model, "SR network (.gdq)")->required();
    i->add_option("--gbc", inf.gbc, "Controller (.gdq)")->required();
    i->add_option("--thresholds", inf.thresholds, "Calibrated thresholds JSON");
    i->add_option("--in", inf.input, "LR image")->required();
    i->add_option("--out", inf.output, "SR image (.png/.ppm/.pgm)")->required();
    i->add_option("--report", inf.report, "Run report JSON");
    i->add_option("--hr", inf.hr, "Ground-truth HR image for PSNR/SSIM");
    i->add_option("--force-bit", inf.force_bit, "Uniform bit for every patch (bypasses GBC/E2B)");
    i->add_flag("--deterministic", inf.deterministic, "Argmax gate decisions (default)");
    i->add_flag("--stochastic", inf.stochastic, "Gumbel-sampled gate decisions");
    i->add_flag("--no-refine", inf.no_refine, "Skip entropy refinement");
    i->add_flag("--timing", inf.timing, "Include runtime in the report");
    i->add_option("--seed", inf.seed, "Random seed")->capture_default_str();
    i->add_option("--patch-size", inf.patch_size, "LR patch side")->capture_default_str();

    SweepArgs sw;
    auto* w = app.add_subcommand("sweep", "Ablation over bit configurations and thresholds");
    w->add_option("--model", sw.model)->required();
    w->add_option("--gbc", sw.gbc)->required();
    w->add_option("--stats", sw.stats)->required();
    w->add_option("--corpus", sw.corpus, "Directory of LR images")->required();
    w->add_option("--hr-dir", sw.hr_dir, "Directory of HR images with matching names");
    w->add_option("--out", sw.out, "CSV table")->required();
    w->add_option("--grid", sw.grid, "bits@thresholds entries or uniform:B, ';'-separated")
        ->capture_default_str();
    w->add_option("--gamma", sw.gamma)->capture_default_str();
    w->add_option("--batch", sw.batch)->capture_default_str();
    w->add_option("--atc-select", sw.select)
        ->check(CLI::IsMember({"per-patch-sequential", "batch-mean"}))
        ->capture_default_str();
    w->add_option("--seed", sw.seed)->capture_default_str();
    w->add_option("--patch-size", sw.patch_size)->capture_default_str();

    std::vector<fs::path> reports;
    auto* r = app.add_subcommand("report", "Tabulate run reports against full precision");
    r->add_option("reports", reports, "Report JSON files")->required();

    InitModelArgs im;
    auto* m = app.add_subcommand("init-model", "Write a seeded reference SR network");
    m->add_option("--out", im.out)->required();
    m->add_option("--scale", im.scale)->check(CLI::IsMember({2, 4}))->capture_default_str();
    m->add_option("--features", im.features)->capture_default_str();
    m->add_option("--blocks", im.blocks)->capture_default_str();
    m->add_option("--seed", im.seed)->capture_default_str();
    m->add_option("--calib-dir", im.calib_dir, "Images for activation clip calibration");
    m->add_option("--calib-patch", im.calib_patch)->capture_default_str();
    m->add_option("--calib-mode", im.calib_mode)
        ->check(CLI::IsMember({"static_max", "moving_average"}))
        ->capture_default_str();

    InitGbcArgs ig;
    auto* g = app.add_subcommand("init-gbc", "Write a seeded granularity-bit controller");
    g->add_option("--out", ig.out)->required();
    g->add_option("--seed", ig.seed)->capture_default_str();
    g->add_option("--depth", ig.depth)->capture_default_str();
    g->add_option("--channels", ig.channels)->capture_default_str();
    g->add_option("--groups", ig.groups)->capture_default_str();
    g->add_option("--bits", ig.bits)->capture_default_str();
    g->add_option("--tau", ig.tau)->capture_default_str();
    g->add_option("--calib-dir", ig.calib_dir, "Images used to standardise the gate logits");
    g->add_option("--calib-patch", ig.calib_patch)->capture_default_str();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (s->parsed()) return cmd_stats(stats, out);
        if (c->parsed()) return cmd_calibrate(cal, out);
        if (i->parsed()) return cmd_infer(inf, out);
        if (w->parsed()) return cmd_sweep(sw, out);
        if (r->parsed()) return cmd_report(reports, out);
        if (m->parsed()) return cmd_init_model(im, out);
        if (g->parsed()) return cmd_init_gbc(ig, out);
    } catch (const MissingArtifact& e) {
        err << "error: " << e.what() << '\n';
        return kExitMissingArtifact;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return i->parsed() ? kExitInferenceFailure : kExitUsage;
    }
    return kExitUsage;
}

} // namespace gdq::cli
