#pragma once

#include "gdq/e2b.hpp"
#include "gdq/entropy.hpp"
#include "gdq/plan.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace gdq {

using Json = nlohmann::ordered_json;

Json entropy_config_to_json(const EntropyConfig& cfg);
EntropyConfig entropy_config_from_json(const Json& j);

/// Stats sidecar: {format, M, config, values (sorted), corpus_order}.
Json stats_to_json(const EntropyStats& stats);
EntropyStats stats_from_json(const Json& j);

/// FNV-1a 64 over the sorted entropy values, as 16 hex digits.
std::string stats_digest(const EntropyStats& stats);

struct ThresholdsRecord {
    CalibratedThresholds thresholds;
    std::vector<double> initial_fractions;
    double gamma = 0.9997;
    std::size_t batch_size = 16;
    AtcSelect select = AtcSelect::per_patch_sequential;
    std::string stats_digest;
    EntropyConfig entropy;
};

Json thresholds_to_json(const ThresholdsRecord& rec);
ThresholdsRecord thresholds_from_json(const Json& j);

Json plan_to_json(const PatchPlan& p);

/// Stable two-space-indented dump with trailing newline.
void write_json(const std::filesystem::path& path, const Json& j);
Json read_json(const std::filesystem::path& path);

} // namespace gdq
