#include "gdq/records.hpp"

#include "gdq/errors.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace gdq {

Json entropy_config_to_json(const EntropyConfig& cfg) {
    return {{"bins", cfg.bins},
            {"sigma", cfg.bandwidth()},
            {"epsilon", cfg.epsilon},
            {"mode", to_string(cfg.mode)}};
}

EntropyConfig entropy_config_from_json(const Json& j) {
    EntropyConfig cfg;
    cfg.bins = j.at("bins").get<std::size_t>();
    cfg.sigma = j.at("sigma").get<double>();
    cfg.epsilon = j.at("epsilon").get<double>();
    cfg.mode = entropy_mode_from_string(j.at("mode").get<std::string>());
    cfg.validate();
    return cfg;
}

Json stats_to_json(const EntropyStats& stats) {
    return {{"format", "gdq-entropy-stats"},
            {"version", 1},
            {"M", stats.count()},
            {"H_min", stats.min()},
            {"H_max", stats.max()},
            {"config", entropy_config_to_json(stats.config)},
            {"values", stats.values},
            {"corpus_order", stats.corpus_order}};
}

EntropyStats stats_from_json(const Json& j) {
    try {
        if (j.at("format").get<std::string>() != "gdq-entropy-stats") {
            throw ContractError("not an entropy statistics file");
        }
        EntropyStats stats;
        stats.config = entropy_config_from_json(j.at("config"));
        stats.values = j.at("values").get<std::vector<double>>();
        stats.corpus_order = j.value("corpus_order", std::vector<double>{});
        const auto m = j.at("M").get<std::size_t>();
        if (stats.values.size() != m || stats.values.empty()) {
            throw ContractError("entropy statistics M does not match the value list");
        }
        if (!std::is_sorted(stats.values.begin(), stats.values.end())) {
            throw ContractError("entropy statistics values are not sorted");
        }
        if (!stats.corpus_order.empty() && stats.corpus_order.size() != m) {
            throw ContractError("entropy statistics corpus order has the wrong length");
        }
        return stats;
    } catch (const nlohmann::json::exception& e) {
        throw ContractError(std::string("malformed entropy statistics: ") + e.what());
    }
}

std::string stats_digest(const EntropyStats& stats) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (double v : stats.values) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &v, sizeof v);
        for (unsigned char b : bytes) {
            h ^= b;
            h *= 0x100000001b3ull;
        }
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Json thresholds_to_json(const ThresholdsRecord& rec) {
    return {{"format", "gdq-thresholds"},
            {"version", 1},
            {"fractions", rec.thresholds.fractions},
            {"initial_fractions", rec.initial_fractions},
            {"cutoffs", rec.thresholds.cutoffs},
            {"bit_codes", rec.thresholds.bit_codes},
            {"gamma", rec.gamma},
            {"iterations", rec.thresholds.iterations},
            {"batch_size", rec.batch_size},
            {"atc_select", to_string(rec.select)},
            {"stats_digest", rec.stats_digest},
            {"entropy", entropy_config_to_json(rec.entropy)}};
}

ThresholdsRecord thresholds_from_json(const Json& j) {
    try {
        if (j.at("format").get<std::string>() != "gdq-thresholds") {
            throw ContractError("not a thresholds file");
        }
        ThresholdsRecord rec;
        rec.thresholds.fractions = j.at("fractions").get<std::vector<double>>();
        rec.thresholds.cutoffs = j.at("cutoffs").get<std::vector<double>>();
        rec.thresholds.bit_codes = j.at("bit_codes").get<std::vector<BitCode>>();
        rec.thresholds.iterations = j.at("iterations").get<std::size_t>();
        rec.initial_fractions = j.at("initial_fractions").get<std::vector<double>>();
        rec.gamma = j.at("gamma").get<double>();
        rec.batch_size = j.at("batch_size").get<std::size_t>();
        rec.select = atc_select_from_string(j.at("atc_select").get<std::string>());
        rec.stats_digest = j.at("stats_digest").get<std::string>();
        rec.entropy = entropy_config_from_json(j.at("entropy"));
        if (rec.thresholds.cutoffs.size() != rec.thresholds.fractions.size() ||
            rec.thresholds.bit_codes.size() != rec.thresholds.cutoffs.size() + 1) {
            throw ContractError("thresholds file has inconsistent list lengths");
        }
        return rec;
    } catch (const nlohmann::json::exception& e) {
        throw ContractError(std::string("malformed thresholds file: ") + e.what());
    }
}

Json plan_to_json(const PatchPlan& p) {
    return {{"id", p.id},
            {"origin", {p.origin.row, p.origin.col}},
            {"entropy", p.entropy},
            {"gbc_bit", p.gbc_bit},
            {"final_bit", p.final_bit},
            {"p", p.gate_score}};
}

void write_json(const std::filesystem::path& path, const Json& j) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot create " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

Json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ContractError("invalid JSON in " + path.string() + ": " + e.what());
    }
}

} // namespace gdq
